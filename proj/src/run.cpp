#include "nch/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "nch/errors.hpp"
#include "nch/io.hpp"

namespace nch {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const SensitivityError*>(&e)) return kExitSensitivity;
  if (dynamic_cast<const LineSearchError*>(&e)) return kExitLineSearch;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const SeparationError*>(&e) ||
      dynamic_cast<const DomainError*>(&e)) {
    return kExitStateSolve;
  }
  return kExitOther;
}

std::string format_report(const CheckReport& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(36) << r.name << std::right
     << " measured=" << std::setprecision(4) << std::scientific << r.measured << "  ["
     << r.setup << (r.mode.empty() ? "" : ", " + r.mode) << "]  expect: " << r.expectation;
  return os.str();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json to_json(const CheckReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    json values = json::object();
    for (const auto& [k, v] : l.values) values[k] = v;
    levels.push_back({{"label", l.label}, {"values", values}});
  }
  return {{"name", r.name},         {"setup", r.setup},   {"mode", r.mode},
          {"expectation", r.expectation}, {"measured", r.measured}, {"pass", r.pass},
          {"levels", levels}};
}

json grid_json(const Grid& g, const TimeGrid& t) {
  return {{"dim", g.dim()}, {"nx", g.nx()}, {"ny", g.ny()}, {"lx", g.lx()},
          {"ly", g.ly()},   {"final_time", t.final_time()}, {"steps", t.steps()}};
}

/// Collects summary.json content and writes it on every update so a failed
/// run still leaves a summary behind.
class Summary {
 public:
  Summary(fs::path dir, const std::string& command) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    j_["command"] = command;
    j_["version"] = kVersion;
    j_["status"] = "running";
    j_["reports"] = json::array();
  }

  void config(const RunConfig& cfg) {
    j_["config_hash"] = cfg.hash;
    json c = json::object();
    for (const auto& [k, v] : cfg.resolved) c[k] = v;
    j_["config"] = c;
    j_["grid"] = grid_json(cfg.state.grid, cfg.state.time);
    flush();
  }
  void report(const CheckReport& r) {
    j_["reports"].push_back(to_json(r));
    flush();
  }
  json& operator[](const char* key) { return j_[key]; }
  void finish(const std::string& status) {
    j_["status"] = status;
    flush();
  }
  void fail(const std::exception& e) {
    j_["status"] = "error";
    j_["error"] = {{"message", e.what()}, {"exit_code", exit_code_for(e)}};
    flush();
  }
  bool all_pass() const {
    for (const auto& r : j_["reports"]) {
      if (!r["pass"].get<bool>()) return false;
    }
    return true;
  }

 private:
  fs::path dir_;
  json j_;

  void flush() const {
    std::ofstream out(dir_ / "summary.json");
    out << std::setw(2) << j_ << "\n";
  }
};

template <class Body>
int guarded(Summary& summary, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    summary.fail(e);
    throw;
  }
}

std::string level_tag(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", n);
  return buf;
}

void write_trajectory(const fs::path& dir, const StateTrajectory& traj, const RunConfig& cfg,
                      std::ofstream& index) {
  const auto& g = cfg.state.grid;
  const auto& t = cfg.state.time;
  const int nt = t.steps();
  for (int n = 0; n <= nt; ++n) {
    if (n % cfg.stride != 0 && n != nt) continue;
    const auto k = static_cast<std::size_t>(n);
    const std::pair<const char*, const Field*> fields[] = {
        {"phi", &traj.phi[k]}, {"mu", &traj.mu[k]}, {"w", &traj.w[k]}, {"theta", &traj.v[k]}};
    for (const auto& [name, f] : fields) {
      const fs::path rel = fs::path("snapshots") / (std::string(name) + "_" + level_tag(n) + ".bin");
      write_snapshot(dir / rel, field_snapshot(*f, g));
      index << n << " " << std::setprecision(17) << t.t(n) << " " << name << " " << rel.string()
            << "\n";
    }
  }
  write_snapshot(dir / "fields" / "phi.bin", space_time_snapshot(traj.phi, g));
  write_snapshot(dir / "fields" / "mu.bin", space_time_snapshot(traj.mu, g));
  write_snapshot(dir / "fields" / "w.bin", space_time_snapshot(traj.w, g));
  write_snapshot(dir / "fields" / "theta.bin", space_time_snapshot(traj.v, g));
}

void write_control(const fs::path& dir, const SpaceTimeField& u, const RunConfig& cfg,
                   std::ofstream& index) {
  const auto& g = cfg.state.grid;
  const auto& t = cfg.state.time;
  for (int n = 0; n <= t.steps(); ++n) {
    const fs::path rel = fs::path("control") / ("u_" + level_tag(n) + ".bin");
    write_snapshot(dir / rel, field_snapshot(u[static_cast<std::size_t>(n)], g));
    index << n << " " << std::setprecision(17) << t.t(n) << " u " << rel.string() << "\n";
  }
  write_snapshot(dir / "control" / "u.bin", space_time_snapshot(u, g));
}

/// Per-level contributions to the cost; final-time terms appear on the last row.
void write_timeseries(const fs::path& dir, const StateTrajectory& traj, const SpaceTimeField& u,
                      const RunConfig& cfg, const SpaceTimeField* stationarity) {
  const auto& g = cfg.state.grid;
  const auto& t = cfg.state.time;
  const auto& cd = cfg.cost;
  const auto& al = cd.alpha;
  const double vol = g.cell_volume();
  const double tau = t.tau();
  const auto last = static_cast<std::size_t>(t.steps());
  CsvWriter csv(dir / "timeseries.csv",
                {"step", "t", "mean_phi", "min_phi", "max_phi", "cost_phi_Q", "cost_phi_Omega",
                 "cost_w_Q", "cost_w_Omega", "cost_theta_Q", "cost_theta_Omega", "cost_u",
                 "stationarity"});
  for (std::size_t n = 0; n <= last; ++n) {
    const bool run = n > 0;
    const bool fin = n == last;
    auto run_term = [&](double a, const Field& d) { return run ? 0.5 * a * vol * tau * d.squaredNorm() : 0.0; };
    auto fin_term = [&](double a, const Field& d) { return fin ? 0.5 * a * vol * d.squaredNorm() : 0.0; };
    const double stat = stationarity ? std::sqrt(vol * (*stationarity)[n].squaredNorm()) : kNaN;
    csv.row({static_cast<double>(n), t.t(static_cast<int>(n)), mean(traj.phi[n], g),
             traj.phi[n].minCoeff(), traj.phi[n].maxCoeff(),
             run_term(al[0], traj.phi[n] - cd.phi_Q[n]), fin_term(al[1], traj.phi[n] - cd.phi_Omega),
             run_term(al[2], traj.w[n] - cd.w_Q[n]), fin_term(al[3], traj.w[n] - cd.w_Omega),
             run_term(al[4], traj.v[n] - cd.dw_Q[n]), fin_term(al[5], traj.v[n] - cd.dw_Omega),
             run_term(cd.nu, u[n]), stat});
  }
}

CheckReport residual_check(const StateTrajectory& traj, const RunConfig& cfg,
                           const SpaceTimeField& u) {
  const auto rep = residual_report(traj, cfg.state, u);
  CheckReport r;
  r.name = "state_residual";
  r.setup = describe(cfg.state);
  r.expectation = "matrix-free scheme residual <= 10 x Newton tolerance";
  r.measured = rep.max();
  r.pass = r.measured <= 10.0 * cfg.state.newton.tol;
  return r;
}

CheckReport separation_summary(const StateTrajectory& traj, const RunConfig& cfg) {
  const auto sep = separation_report(traj.phi, cfg.state.potential);
  CheckReport r;
  r.name = "separation";
  r.setup = describe(cfg.state);
  r.expectation = "min/max phi strictly inside the potential domain";
  r.levels.push_back({"trajectory",
                      {{"min_phi", sep.min}, {"max_phi", sep.max},
                       {"margin_lo", sep.margin_lo}, {"margin_hi", sep.margin_hi}}});
  r.measured = std::min(sep.margin_lo, sep.margin_hi);
  r.pass = sep.separated();
  return r;
}

void state_reports(Summary& summary, const StateTrajectory& traj, const RunConfig& cfg,
                   const SpaceTimeField& u, std::ostream& log) {
  std::vector<CheckReport> reps = {
      residual_check(traj, cfg, u),
      mass_balance_check(traj, cfg.state.source, cfg.state.params.gamma, cfg.state.grid,
                         cfg.state.time)};
  reps[1].setup = describe(cfg.state);
  if (cfg.state.potential.singular()) reps.push_back(separation_summary(traj, cfg));
  for (const auto& r : reps) {
    log << format_report(r) << "\n";
    summary.report(r);
  }
}

}  // namespace

int run_simulate(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg.output_dir);
  Summary summary(dir, "simulate");
  summary.config(cfg);
  return guarded(summary, [&] {
    log << "simulate: " << describe(cfg.state) << " -> " << dir.string() << "\n";
    const auto traj = solve_state(cfg.state, cfg.control);
    std::ofstream index(dir / "index.txt");
    write_trajectory(dir, traj, cfg, index);
    write_timeseries(dir, traj, cfg.control, cfg, nullptr);
    const auto terms = cost_terms(traj, cfg.control, cfg.cost, cfg.state.grid, cfg.state.time);
    summary["cost"] = {{"terms", terms.terms}, {"total", terms.total()}};
    int newton = 0;
    for (const auto& s : traj.steps) newton += s.iterations;
    summary["newton_iterations"] = newton;
    state_reports(summary, traj, cfg, cfg.control, log);
    const bool ok = summary.all_pass();
    summary.finish(ok ? "ok" : "check_failed");
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int run_optimize(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg.output_dir);
  Summary summary(dir, "optimize");
  summary.config(cfg);
  return guarded(summary, [&] {
    log << "optimize: " << describe(cfg.state) << ", mode " << to_string(cfg.mode) << " -> "
        << dir.string() << "\n";
    const ControlProblem prob = cfg.problem();
    auto write_trace = [&](const OptimizeResult& res) {
      CsvWriter csv(dir / "trace.csv",
                    {"iteration", "cost", "stationarity", "step", "active_fraction"});
      for (const auto& e : res.trace) {
        csv.row({static_cast<double>(e.iteration), e.cost, e.stationarity, e.step,
                 e.active_fraction});
      }
    };
    OptimizeResult res;
    try {
      res = optimize(prob, cfg.control, cfg.optimizer);
    } catch (const StalledDescent& e) {
      write_trace(e.partial());
      std::ofstream index(dir / "index.txt");
      write_control(dir, e.partial().control, cfg, index);
      throw;
    }
    write_trace(res);
    for (const auto& e : res.trace) {
      if (e.iteration % 10 == 0 || e.iteration == res.iterations) {
        log << "  it " << std::setw(4) << e.iteration << "  J = " << std::scientific
            << std::setprecision(6) << e.cost << "  stat = " << e.stationarity << "\n"
            << std::defaultfloat;
      }
    }
    const auto ev = evaluate_gradient(prob, res.control);
    std::ofstream index(dir / "index.txt");
    write_trajectory(dir, ev.state, cfg, index);
    write_control(dir, res.control, cfg, index);
    SpaceTimeField stat_field =
        res.control - project(SpaceTimeField::axpy(res.control, -res.probe_step, ev.gradient),
                              prob.bounds);
    write_timeseries(dir, ev.state, res.control, cfg, &stat_field);

    CheckReport conv;
    conv.name = "optimizer";
    conv.setup = describe(cfg.state);
    conv.mode = to_string(cfg.mode);
    conv.expectation = "stationarity <= " + std::to_string(cfg.optimizer.stationarity_tol) +
                       " within " + std::to_string(cfg.optimizer.max_iters) +
                       " iterations, nonincreasing costs";
    bool monotone = true;
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
      monotone = monotone && res.trace[k].cost <= res.trace[k - 1].cost;
    }
    const double projection = projection_residual(prob, res.control, ev.adjoint);
    conv.levels.push_back({"final",
                           {{"iterations", res.iterations},
                            {"cost", res.trace.back().cost},
                            {"stationarity", res.trace.back().stationarity},
                            {"probe_step", res.probe_step},
                            {"monotone", monotone ? 1.0 : 0.0},
                            {"projection_residual", projection}}});
    conv.measured = res.trace.back().stationarity;
    conv.pass = res.converged && monotone;
    log << format_report(conv) << "\n";
    summary.report(conv);
    summary["iterations"] = res.iterations;
    summary["converged"] = res.converged;
    state_reports(summary, ev.state, cfg, res.control, log);
    const bool ok = summary.all_pass();
    summary.finish(ok ? "ok" : "check_failed");
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int run_grad_check(const RunConfig& cfg, const std::optional<std::vector<double>>& eps,
                   std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg.output_dir);
  Summary summary(dir, "grad-check");
  summary.config(cfg);
  return guarded(summary, [&] {
    const auto r = fd_gradient_check(cfg.problem(), cfg.control, cfg.direction,
                                     eps.value_or(cfg.eps_list));
    for (const auto& l : r.levels) {
      log << "  " << std::setw(10) << l.label;
      for (const auto& [k, v] : l.values) {
        if (k != "eps") log << "  " << k << " = " << std::setprecision(12) << v;
      }
      log << "\n";
    }
    log << format_report(r) << "\n";
    summary.report(r);
    summary.finish(r.pass ? "ok" : "check_failed");
    return r.pass ? kExitOk : kExitCheckFailed;
  });
}

int run_adjoint_check(const RunConfig& cfg, const std::optional<AdjointMode>& mode,
                      std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg.output_dir);
  Summary summary(dir, "adjoint-check");
  summary.config(cfg);
  return guarded(summary, [&] {
    ControlProblem prob = cfg.problem();
    if (mode) prob.mode = *mode;
    const bool transpose = prob.mode == AdjointMode::Transpose;
    auto r = duality_gap_check(prob, cfg.control, cfg.direction, transpose ? 1e-10 : 1.0);
    if (!transpose) {
      r.expectation = "gap is O(tau) (reported; refinement is checked by the battery)";
    }
    log << format_report(r) << "\n";
    summary.report(r);
    summary.finish(r.pass ? "ok" : "check_failed");
    return r.pass ? kExitOk : kExitCheckFailed;
  });
}

int run_battery_command(bool quick, const fs::path& dir, std::ostream& log) {
  Summary summary(dir, quick ? "battery --quick" : "battery");
  return guarded(summary, [&] {
    const auto reports = run_battery(quick);
    for (const auto& r : reports) {
      log << format_report(r) << "\n";
      summary.report(r);
    }
    const bool ok = summary.all_pass();
    summary.finish(ok ? "ok" : "check_failed");
    log << (ok ? "all checks passed" : "some checks FAILED") << " (" << reports.size()
        << " checks)\n";
    return ok ? kExitOk : kExitCheckFailed;
  });
}

std::vector<fs::path> emit_plot_data(const fs::path& run_dir) {
  const fs::path index_path = run_dir / "index.txt";
  const fs::path series_path = run_dir / "timeseries.csv";
  const fs::path trace_path = run_dir / "trace.csv";
  const fs::path summary_path = run_dir / "summary.json";
  if (!fs::exists(index_path) && !fs::exists(trace_path) && !fs::exists(series_path)) {
    throw Error("no run artifacts (index.txt, timeseries.csv, trace.csv) in '" +
                run_dir.string() + "'");
  }
  const fs::path out = run_dir / "plots";
  fs::create_directories(out);
  std::vector<fs::path> written;

  if (fs::exists(index_path)) {
    if (!fs::exists(summary_path)) throw Error("missing summary.json in '" + run_dir.string() + "'");
    json s;
    std::ifstream(summary_path) >> s;
    const auto& gj = s.at("grid");
    const Grid g = gj.at("dim").get<int>() == 2
                       ? Grid::rect(gj.at("lx").get<double>(), gj.at("ly").get<double>(),
                                    gj.at("nx").get<int>(), gj.at("ny").get<int>())
                       : Grid::line(gj.at("lx").get<double>(), gj.at("nx").get<int>());
    std::ifstream index(index_path);
    int step;
    double t;
    std::string field, rel;
    while (index >> step >> t >> field >> rel) {
      const Field f = field_from_snapshot(read_snapshot(run_dir / rel), g);
      const fs::path p = out / (fs::path(rel).stem().string() + ".dat");
      std::ofstream os(p);
      os << std::setprecision(17) << "# " << field << " at t = " << t << "\n";
      if (g.dim() == 1) {
        os << "# x value\n";
        for (int i = 0; i < g.nx(); ++i) os << g.x(i) << " " << f[g.index(i)] << "\n";
      } else {
        os << "# x y value\n";
        for (int j = 0; j < g.ny(); ++j) {
          for (int i = 0; i < g.nx(); ++i) os << g.x(i) << " " << g.y(j) << " " << f[g.index(i, j)] << "\n";
          os << "\n";
        }
      }
      written.push_back(p);
    }
  }
  auto csv_to_columns = [&](const fs::path& src, const fs::path& dst,
                            const std::vector<std::string>& cols) {
    const CsvTable tab = read_csv(src);
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(tab.column(c));
    std::ofstream os(dst);
    os << "#";
    for (const auto& c : cols) os << " " << c;
    os << "\n" << std::setprecision(17);
    for (const auto& row : tab.rows) {
      for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? " " : "") << row.at(idx[k]);
      os << "\n";
    }
    written.push_back(dst);
  };
  if (fs::exists(series_path)) {
    csv_to_columns(series_path, out / "timeseries.dat",
                   read_csv(series_path).header);
  }
  if (fs::exists(trace_path)) {
    csv_to_columns(trace_path, out / "convergence.dat",
                   {"iteration", "cost", "stationarity", "step", "active_fraction"});
  }
  return written;
}

}  // namespace nch
