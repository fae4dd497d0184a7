#include "nch/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace nch {

namespace {

constexpr double kPi = std::numbers::pi;

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string describe(const StateSystem& sys) {
  std::ostringstream os;
  const auto& g = sys.grid;
  os << g.dim() << "D ";
  if (g.dim() == 1) {
    os << "N=" << g.nx();
  } else {
    os << g.nx() << "x" << g.ny();
  }
  os << ", Nt=" << sys.time.steps() << ", T=" << sys.time.final_time() << ", "
     << to_string(sys.potential.kind) << " potential";
  return os.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

CheckReport fd_gradient_check(const ControlProblem& prob, const SpaceTimeField& u,
                              const SpaceTimeField& h, const std::vector<double>& eps_list,
                              double tol) {
  CheckReport rep;
  rep.name = "fd_gradient";
  rep.setup = describe(prob.state);
  rep.mode = to_string(prob.mode);
  rep.expectation = "min relative error <= " + fmt(tol);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto ev = evaluate_gradient(prob, u);
  const double directional = inner_q(h, ev.gradient, g, t);
  double best = std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    const double jp = reduced_cost(prob, SpaceTimeField::axpy(u, eps, h));
    const double jm = reduced_cost(prob, SpaceTimeField::axpy(u, -eps, h));
    const double fd = (jp - jm) / (2.0 * eps);
    const double rel = relative_gap(fd, directional);
    best = std::min(best, rel);
    rep.levels.push_back(
        {"eps=" + fmt(eps), {{"eps", eps}, {"fd", fd}, {"adjoint", directional}, {"rel_error", rel}}});
  }
  rep.measured = best;
  rep.pass = best <= tol;
  return rep;
}

CheckReport linearization_order_check(const ControlProblem& prob, const SpaceTimeField& u,
                                      const SpaceTimeField& h,
                                      const std::vector<double>& eps_list, double slope_lo,
                                      double slope_hi, double exact_tol) {
  CheckReport rep;
  rep.name = "linearization_order";
  rep.setup = describe(prob.state);
  rep.mode = "transpose";
  rep.expectation = "slope in [" + fmt(slope_lo) + ", " + fmt(slope_hi) +
                    "] or all remainders <= " + fmt(exact_tol);
  const auto& sys = prob.state;
  const auto& g = sys.grid;
  const double tau = sys.time.tau();
  const auto base = solve_state(sys, u);
  // The derivative of the discrete control-to-state map is the transposed-mode
  // linearization.
  const auto lin = solve_linearized(sys, base, h, AdjointMode::Transpose);

  std::vector<double> eps_used;
  std::vector<double> rems;
  double max_rem = 0.0;
  for (double eps : eps_list) {
    const auto pert = solve_state(sys, SpaceTimeField::axpy(u, eps, h));
    double phi_max = 0.0, phi_lap = 0.0, mu_l2 = 0.0, w_max = 0.0, v_max = 0.0;
    for (std::size_t n = 0; n < base.phi.size(); ++n) {
      const Field ephi = pert.phi[n] - base.phi[n] - eps * lin.xi[n];
      const Field ew = pert.w[n] - base.w[n] - eps * lin.zeta[n];
      const Field ev = pert.v[n] - base.v[n] - eps * lin.dzeta[n];
      phi_max = std::max(phi_max, l2_norm(ephi, g));
      w_max = std::max(w_max, l2_norm(ew, g));
      v_max = std::max(v_max, l2_norm(ev, g));
      if (n > 0) {
        const Field emu = pert.mu[n] - base.mu[n] - eps * lin.eta[n];
        phi_lap += tau * std::pow(l2_norm(laplacian_neumann(ephi, g), g), 2);
        mu_l2 += tau * std::pow(l2_norm(emu, g), 2);
      }
    }
    const double rem = phi_max + std::sqrt(phi_lap) + std::sqrt(mu_l2) + w_max + v_max;
    max_rem = std::max(max_rem, rem);
    rep.levels.push_back({"eps=" + fmt(eps), {{"eps", eps}, {"remainder", rem}}});
    if (rem > 0.0) {
      eps_used.push_back(eps);
      rems.push_back(rem);
    }
  }
  if (max_rem <= exact_tol) {
    rep.measured = max_rem;
    rep.pass = true;
    return rep;
  }
  const double slope = rems.size() >= 2 ? loglog_slope(eps_used, rems) : 0.0;
  rep.measured = slope;
  rep.pass = slope >= slope_lo && slope <= slope_hi;
  return rep;
}

CheckReport duality_gap_check(const ControlProblem& prob, const SpaceTimeField& u,
                              const SpaceTimeField& h, double tol) {
  CheckReport rep;
  rep.name = "duality_gap";
  rep.setup = describe(prob.state);
  rep.mode = to_string(prob.mode);
  rep.expectation = "relative gap <= " + fmt(tol);
  const auto& sys = prob.state;
  const auto base = solve_state(sys, u);
  const auto lin = solve_linearized(sys, base, h, prob.mode);
  const auto adj = solve_adjoint(sys, base, prob.cost, prob.mode);
  const double lhs = inner_q(h, adj.control_sensitivity(), sys.grid, sys.time);
  const double rhs = tracking_pairing(sys, base, lin, prob.cost);
  const double gap = relative_gap(lhs, rhs);
  rep.levels.push_back({"Nt=" + std::to_string(sys.time.steps()),
                        {{"h_dot_r", lhs}, {"tracking_pairing", rhs}, {"gap", gap}}});
  rep.measured = gap;
  rep.pass = gap <= tol;
  return rep;
}

CheckReport duality_refinement_check(const std::function<DualityInstance(int)>& make, int nt,
                                     double ratio_lo, double ratio_hi) {
  CheckReport rep;
  rep.name = "duality_refinement";
  rep.mode = "continuous";
  rep.expectation = "gap(tau) / gap(tau/2) in [" + fmt(ratio_lo) + ", " + fmt(ratio_hi) + "]";
  std::vector<double> gaps;
  for (int steps : {nt, 2 * nt}) {
    DualityInstance inst = make(steps);
    inst.problem.mode = AdjointMode::Continuous;
    if (rep.setup.empty()) rep.setup = describe(inst.problem.state);
    const auto r = duality_gap_check(inst.problem, inst.control, inst.direction, 1.0);
    gaps.push_back(r.measured);
    rep.levels.push_back({"Nt=" + std::to_string(steps), r.levels.front().values});
  }
  rep.measured = gaps[0] / gaps[1];
  rep.pass = rep.measured >= ratio_lo && rep.measured <= ratio_hi;
  return rep;
}

CheckReport mass_balance_check(const StateTrajectory& traj, const SpaceTimeField& f,
                               double gamma, const Grid& grid, const TimeGrid& time,
                               double tol) {
  CheckReport rep;
  rep.name = "mass_balance";
  rep.expectation = "per-step mean recursion residual <= " + fmt(tol);
  const double tau = time.tau();
  const bool unforced = f.max_abs() == 0.0;
  double worst = 0.0;
  double worst_closed = 0.0;
  const double m0 = mean(traj.phi[0], grid);
  for (std::size_t n = 0; n + 1 < traj.phi.size(); ++n) {
    const double m_old = mean(traj.phi[n], grid);
    const double m_new = mean(traj.phi[n + 1], grid);
    const double res = std::abs(m_new * (1.0 + tau * gamma) - m_old - tau * mean(f[n + 1], grid));
    worst = std::max(worst, res);
    if (unforced) {
      const double closed = m0 / std::pow(1.0 + tau * gamma, static_cast<double>(n + 1));
      worst_closed = std::max(worst_closed, std::abs(m_new - closed));
    }
  }
  CheckLevel lvl{"all steps", {{"max_recursion_residual", worst}}};
  if (unforced) {
    lvl.values.emplace_back("max_closed_form_error", worst_closed);
    rep.expectation += " and |mean(phi^n) - mean(phi0)/(1+tau gamma)^n| <= " + fmt(tol);
  }
  rep.levels.push_back(lvl);
  rep.measured = std::max(worst, worst_closed);
  rep.pass = rep.measured <= tol;
  return rep;
}

CheckReport uniform_state_check(const StateSystem& sys, double tol) {
  CheckReport rep;
  rep.name = "uniform_state";
  rep.setup = describe(sys);
  rep.expectation = "phi = phi0, v = w1, w^n = w0 + n tau w1 to " + fmt(tol);
  const SpaceTimeField zero(sys.grid, sys.time);
  const auto traj = solve_state(sys, zero);
  double err = 0.0;
  for (std::size_t n = 0; n < traj.phi.size(); ++n) {
    const double nt = static_cast<double>(n) * sys.time.tau();
    err = std::max(err, (traj.phi[n] - sys.init.phi0).lpNorm<Eigen::Infinity>());
    err = std::max(err, (traj.v[n] - sys.init.w1).lpNorm<Eigen::Infinity>());
    err = std::max(err, (traj.w[n] - sys.init.w0 - nt * sys.init.w1).lpNorm<Eigen::Infinity>());
  }
  rep.levels.push_back({"all steps", {{"max_error", err}}});
  rep.measured = err;
  rep.pass = err <= tol;
  return rep;
}

CheckReport separation_check(const StateSystem& sys, const SpaceTimeField& control) {
  CheckReport rep;
  rep.name = "separation";
  rep.setup = describe(sys);
  rep.expectation = "margins > 0, no clipping, F^(0..3)(phi) finite";
  const auto compat = validate_compatibility(sys.potential, sys.init.phi0, sys.source,
                                             sys.params.gamma, sys.grid);
  CheckLevel gate{"compatibility", {}};
  for (const auto& e : compat.entries) gate.values.emplace_back(e.name, e.value);
  rep.levels.push_back(gate);
  if (!compat.pass) {
    rep.measured = -1.0;
    rep.pass = false;
    rep.expectation += " (compatibility gate failed before solve)";
    return rep;
  }
  StateTrajectory traj;
  try {
    traj = solve_state(sys, control);
  } catch (const SeparationError& e) {
    rep.levels.push_back({"solve", {{"clipped_nodes", e.clipped_nodes()},
                                    {"failed_step", e.step()}}});
    rep.measured = 0.0;
    rep.pass = false;
    return rep;
  }
  const auto sep = separation_report(traj.phi, sys.potential);
  CheckLevel lvl{"trajectory",
                 {{"min_phi", sep.min},
                  {"max_phi", sep.max},
                  {"margin_lo", sep.margin_lo},
                  {"margin_hi", sep.margin_hi},
                  {"clipped_nodes", 0.0}}};
  bool finite = true;
  for (int order = 0; order <= 3; ++order) {
    double m = 0.0;
    for (const auto& slice : traj.phi) {
      for (Eigen::Index i = 0; i < slice.size(); ++i) {
        double v;
        try {
          v = std::abs(F_eval(sys.potential, slice[i], order));
        } catch (const DomainError&) {
          v = std::numeric_limits<double>::infinity();
        }
        m = std::max(m, v);
      }
    }
    finite = finite && std::isfinite(m);
    lvl.values.emplace_back("max_abs_F" + std::to_string(order), m);
  }
  rep.levels.push_back(lvl);
  rep.measured = std::min(sep.margin_lo, sep.margin_hi);
  rep.pass = sep.separated() && finite;
  return rep;
}

std::string to_string(MmsKind kind) {
  switch (kind) {
    case MmsKind::Constant: return "constant";
    case MmsKind::Space: return "space";
    case MmsKind::Time: return "time";
  }
  return "unknown";
}

namespace {

struct MmsSetup {
  StateSystem sys;
  SpaceTimeField control;
  SpaceTimeField phi_exact;
  SpaceTimeField w_exact;
};

Grid unit_grid(int dim, int n) { return dim == 1 ? Grid::line(1.0, n) : Grid::rect(1.0, 1.0, n, n); }

// psi = cos(pi x) [cos(pi y)], an eigenfunction of the continuous Neumann Laplacian.
double mode_value(int dim, double x, double y) {
  return std::cos(kPi * x) * (dim == 2 ? std::cos(kPi * y) : 1.0);
}

double mode_grad_sq(int dim, double x, double y) {
  if (dim == 1) return kPi * kPi * std::pow(std::sin(kPi * x), 2);
  return kPi * kPi * (std::pow(std::sin(kPi * x) * std::cos(kPi * y), 2) +
                      std::pow(std::cos(kPi * x) * std::sin(kPi * y), 2));
}

MmsSetup mms_space(int dim, int n) {
  const PhysicalParams prm{};
  const auto pot = PotentialSpec::regular();
  const Grid g = unit_grid(dim, n);
  const TimeGrid t(0.25, 8);
  const double c0 = 0.1, amp = 0.3, b0 = 0.2, b1 = 0.5;
  const double k2 = kPi * kPi * dim;
  auto phi = [=](double x, double y, double) { return c0 + amp * mode_value(dim, x, y); };
  auto w = [=](double x, double y, double s) { return (b0 + b1 * s) * mode_value(dim, x, y); };
  auto f = [=](double x, double y, double) {
    const double psi = mode_value(dim, x, y);
    const double p = c0 + amp * psi;
    const double lap_dF = F_eval(pot, p, 3) * amp * amp * mode_grad_sq(dim, x, y) +
                          F_eval(pot, p, 2) * (-amp * k2 * psi);
    const double lap_mu = -amp * k2 * k2 * psi + lap_dF + prm.b * b1 * k2 * psi;
    return -lap_mu + prm.gamma * p;
  };
  auto u = [=](double x, double y, double s) {
    const double psi = mode_value(dim, x, y);
    return prm.kappa1 * b1 * k2 * psi + prm.kappa2 * (b0 + b1 * s) * k2 * psi;
  };
  StateSystem sys{g, t, prm, pot,
                  InitialData{g.sample([&](double x, double y) { return phi(x, y, 0.0); }),
                              g.sample([&](double x, double y) { return w(x, y, 0.0); }),
                              g.sample([&](double x, double y) { return b1 * mode_value(dim, x, y); })},
                  SpaceTimeField::sample(g, t, f), NewtonConfig{}};
  return {sys, SpaceTimeField::sample(g, t, u), SpaceTimeField::sample(g, t, phi),
          SpaceTimeField::sample(g, t, w)};
}

MmsSetup mms_time(int dim, int nt) {
  const PhysicalParams prm{};
  const auto pot = PotentialSpec::regular();
  const Grid g = unit_grid(dim, dim == 1 ? 32 : 16);
  const TimeGrid t(1.0, nt);
  const double c0 = 0.1;
  const Field psi = g.sample([=](double x, double y) { return mode_value(dim, x, y); });
  const Field lap_psi = laplacian_neumann(psi, g);
  auto A = [](double s) { return 0.3 * std::cos(2.0 * s); };
  auto dA = [](double s) { return -0.6 * std::sin(2.0 * s); };
  auto B = [](double s) { return 0.2 + 0.5 * std::sin(2.0 * s); };
  auto dB = [](double s) { return std::cos(2.0 * s); };
  auto ddB = [](double s) { return -2.0 * std::sin(2.0 * s); };

  std::vector<Field> fs, us, phis, ws;
  for (int n = 0; n <= nt; ++n) {
    const double s = t.t(n);
    Field phi = (c0 + A(s) * psi.array()).matrix();
    Field mu = -A(s) * lap_psi;
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] += F_eval(pot, phi[i], 1);
    mu.array() += prm.a;
    mu -= prm.b * dB(s) * psi;
    fs.push_back(dA(s) * psi - laplacian_neumann(mu, g) + prm.gamma * phi);
    us.push_back(ddB(s) * psi - (prm.kappa1 * dB(s) + prm.kappa2 * B(s)) * lap_psi +
                 prm.lambda * dA(s) * psi);
    phis.push_back(phi);
    ws.push_back(B(s) * psi);
  }
  StateSystem sys{g, t, prm, pot, InitialData{phis[0], ws[0], dB(0.0) * psi},
                  SpaceTimeField(fs), NewtonConfig{}};
  return {sys, SpaceTimeField(us), SpaceTimeField(phis), SpaceTimeField(ws)};
}

MmsSetup mms_constant(int dim, int n) {
  const PhysicalParams prm{};
  const Grid g = unit_grid(dim, n);
  const TimeGrid t(0.5, 10);
  const double c = 0.3, w0 = 0.1, w1 = 0.2;
  StateSystem sys{g, t, prm, PotentialSpec::regular(),
                  InitialData{g.constant(c), g.constant(w0), g.constant(w1)},
                  SpaceTimeField(g, t, prm.gamma * c), NewtonConfig{}};
  return {sys, SpaceTimeField(g, t, 0.0), SpaceTimeField(g, t, c),
          SpaceTimeField::sample(g, t, [=](double, double, double s) { return w0 + w1 * s; })};
}

}  // namespace

CheckReport mms_convergence_check(int dim, MmsKind kind, const std::vector<int>& levels,
                                  double order_tol) {
  CheckReport rep;
  rep.name = "mms_" + to_string(kind) + "_" + std::to_string(dim) + "d";
  const double expected = kind == MmsKind::Space ? 2.0 : 1.0;
  std::vector<double> errors;
  std::vector<double> sizes;
  for (int level : levels) {
    MmsSetup s = kind == MmsKind::Space  ? mms_space(dim, level)
                 : kind == MmsKind::Time ? mms_time(dim, level)
                                         : mms_constant(dim, level);
    if (rep.setup.empty()) rep.setup = describe(s.sys);
    const auto traj = solve_state(s.sys, s.control);
    double err = 0.0;
    for (std::size_t n = 0; n < traj.phi.size(); ++n) {
      err = std::max(err, l2_norm(traj.phi[n] - s.phi_exact[n], s.sys.grid));
      err = std::max(err, l2_norm(traj.w[n] - s.w_exact[n], s.sys.grid));
    }
    errors.push_back(err);
    sizes.push_back(kind == MmsKind::Time ? s.sys.time.tau() : s.sys.grid.hx());
    rep.levels.push_back({"level=" + std::to_string(level), {{"size", sizes.back()}, {"error", err}}});
  }
  if (kind == MmsKind::Constant) {
    const double worst = *std::max_element(errors.begin(), errors.end());
    rep.expectation = "errors <= 1e-11 at every level";
    rep.measured = worst;
    rep.pass = worst <= 1e-11;
    return rep;
  }
  rep.expectation = "observed order " + fmt(expected) + " +- " + fmt(order_tol) + " between levels";
  bool ok = true;
  double worst_dev = 0.0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log(errors[i - 1] / errors[i]) / std::log(sizes[i - 1] / sizes[i]);
    rep.levels[i].values.emplace_back("observed_order", order);
    ok = ok && std::abs(order - expected) <= order_tol;
    if (std::abs(order - expected) >= worst_dev) {
      worst_dev = std::abs(order - expected);
      rep.measured = order;
    }
  }
  rep.pass = ok && errors.size() >= 3;
  return rep;
}

CheckReport inverse_neumann_check(const Grid& grid, std::uint64_t seed, int samples,
                                  double residual_tol, double symmetry_tol) {
  CheckReport rep;
  rep.name = "inverse_neumann";
  rep.setup = std::to_string(grid.dim()) + "D " + std::to_string(grid.nx()) +
              (grid.dim() == 2 ? "x" + std::to_string(grid.ny()) : std::string());
  rep.expectation = "||-Lap N psi - psi|| / ||psi|| <= " + fmt(residual_tol) +
                    ", |<psi,N zeta> - <zeta,N psi>| / (||psi|| ||N zeta||) <= " +
                    fmt(symmetry_tol);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto random_zero_mean = [&] {
    Field f(static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = dist(rng);
    f.array() -= f.mean();
    return f;
  };
  double worst_res = 0.0;
  double worst_sym = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Field psi = random_zero_mean();
    const Field zeta = random_zero_mean();
    const Field npsi = inverse_neumann(psi, grid);
    const Field nzeta = inverse_neumann(zeta, grid);
    const double res = l2_norm(-laplacian_neumann(npsi, grid) - psi, grid) / l2_norm(psi, grid);
    const double sym_scale = std::max(l2_norm(psi, grid) * l2_norm(nzeta, grid),
                                      l2_norm(zeta, grid) * l2_norm(npsi, grid));
    const double sym = std::abs(inner(psi, nzeta, grid) - inner(zeta, npsi, grid)) / sym_scale;
    worst_res = std::max(worst_res, res);
    worst_sym = std::max(worst_sym, sym);
    rep.levels.push_back({"sample=" + std::to_string(s), {{"residual", res}, {"symmetry_gap", sym}}});
  }
  rep.measured = std::max(worst_res / residual_tol, worst_sym / symmetry_tol);
  rep.pass = worst_res <= residual_tol && worst_sym <= symmetry_tol;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

ControlProblem regular_reference(const Grid& g, const TimeGrid& t, AdjointMode mode) {
  const int dim = g.dim();
  auto yterm = [dim](double y) { return dim == 2 ? std::cos(kPi * y) : 1.0; };
  auto smooth = [=](double a, double b) {
    return [=](double x, double y, double s) { return a * std::cos(kPi * x) * yterm(y) + b * s * x; };
  };
  StateSystem sys{g, t, PhysicalParams{}, PotentialSpec::regular(),
                  InitialData{g.sample([=](double x, double y) { return 0.3 * std::cos(kPi * x) * yterm(y); }),
                              g.sample([](double x, double) { return 0.1 * std::cos(kPi * x); }),
                              g.constant(0.2)},
                  SpaceTimeField::sample(g, t, smooth(0.2, 0.1)), NewtonConfig{}};
  CostData cd = CostData::zero_targets(g, t, {1, 1, 1, 1, 1, 1}, 0.1);
  cd.phi_Q = SpaceTimeField::sample(g, t, smooth(0.1, 0.3));
  cd.w_Q = SpaceTimeField::sample(g, t, smooth(-0.1, 0.3));
  cd.dw_Q = SpaceTimeField::sample(g, t, smooth(0.2, -0.3));
  cd.phi_Omega = g.sample([](double x, double) { return 0.2 - 0.1 * x; });
  cd.w_Omega = g.constant(-0.1);
  cd.dw_Omega = g.sample([](double x, double) { return 0.3 * x; });
  return ControlProblem{sys, cd, ControlBounds::constant(g, t, -10.0, 10.0), mode};
}

}  // namespace

ControlProblem regular_reference_1d(int nx, int nt, double final_time, AdjointMode mode) {
  return regular_reference(Grid::line(1.0, nx), TimeGrid(final_time, nt), mode);
}

ControlProblem regular_reference_2d(int n, int nt, double final_time, AdjointMode mode) {
  return regular_reference(Grid::rect(1.0, 1.0, n, n), TimeGrid(final_time, nt), mode);
}

SpaceTimeField reference_control(const Grid& g, const TimeGrid& t) {
  return SpaceTimeField::sample(g, t, [](double x, double y, double s) {
    return 0.5 * std::cos(kPi * x) + s * x + 0.2 * y;
  });
}

SpaceTimeField reference_direction(const Grid& g, const TimeGrid& t) {
  return SpaceTimeField::sample(g, t, [](double x, double y, double s) {
    return std::sin(3.0 * x) + s + 0.3 * std::cos(2.0 * y);
  });
}

StateSystem logarithmic_reference_2d(int n, int nt, double final_time) {
  const Grid g = Grid::rect(1.0, 1.0, n, n);
  const TimeGrid t(final_time, nt);
  return StateSystem{g, t, PhysicalParams{}, PotentialSpec::logarithmic(2.0),
                     InitialData{g.sample([](double x, double y) {
                                   return 0.2 * std::cos(kPi * x) * std::cos(kPi * y);
                                 }),
                                 g.zeros(), g.zeros()},
                     SpaceTimeField(g, t), NewtonConfig{}};
}

SpaceTimeField bounded_heat_source(const Grid& g, const TimeGrid& t) {
  const double T = t.final_time();
  return SpaceTimeField::sample(g, t, [T](double x, double y, double s) {
    return std::cos(kPi * x) * std::cos(2.0 * kPi * y) * std::cos(kPi * s / T);
  });
}

InverseSourceCase inverse_source_case(int nx, int nt, double final_time, double nu) {
  const Grid g = Grid::line(1.0, nx);
  const TimeGrid t(final_time, nt);
  StateSystem sys{g, t, PhysicalParams{}, PotentialSpec::regular(),
                  InitialData{g.sample([](double x, double) { return 0.2 * std::cos(kPi * x); }),
                              g.zeros(), g.zeros()},
                  SpaceTimeField(g, t), NewtonConfig{1e-12, 50, 30}};
  SpaceTimeField truth = SpaceTimeField::sample(g, t, [final_time](double x, double, double s) {
    return 0.5 + 0.8 * std::cos(kPi * x) * std::sin(kPi * s / final_time);
  });
  const auto target = solve_state(sys, truth);
  CostData cd = CostData::zero_targets(g, t, {0.0, 0.0, 1e-2, 0.0, 1e-2, 0.0}, nu);
  cd.w_Q = target.w;
  cd.dw_Q = target.v;
  ControlProblem prob{sys, cd, ControlBounds::constant(g, t, -2.0, 2.0), AdjointMode::Transpose};
  return {prob, truth};
}

CheckReport inverse_source_check(const InverseSourceCase& c, const OptimizeConfig& cfg,
                                 double projection_tol) {
  CheckReport rep;
  rep.name = "inverse_source";
  rep.setup = describe(c.problem.state) + ", nu=" + fmt(c.problem.cost.nu);
  rep.mode = to_string(c.problem.mode);
  rep.expectation = "stationarity <= " + fmt(cfg.stationarity_tol) + " within " +
                    std::to_string(cfg.max_iters) +
                    " iterations, nonincreasing costs, ||u - P(-r/nu)|| / max(1, ||u||) <= " +
                    fmt(projection_tol);
  const auto& g = c.problem.state.grid;
  const auto& t = c.problem.state.time;
  const auto res = optimize(c.problem, SpaceTimeField(g, t), cfg);
  bool monotone = true;
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    monotone = monotone && res.trace[k].cost <= res.trace[k - 1].cost;
  }
  const auto ev = evaluate_gradient(c.problem, res.control);
  const double projection = projection_residual(c.problem, res.control, ev.adjoint);
  const double recovery = norm_q(res.control - c.truth, g, t) / norm_q(c.truth, g, t);
  const double stat = res.trace.back().stationarity;
  rep.levels.push_back({"optimizer",
                        {{"iterations", res.iterations},
                         {"initial_cost", res.trace.front().cost},
                         {"final_cost", res.trace.back().cost},
                         {"stationarity", stat},
                         {"monotone", monotone ? 1.0 : 0.0},
                         {"projection_residual", projection},
                         {"relative_recovery_error", recovery}}});
  rep.measured = stat;
  rep.pass = res.converged && monotone && projection <= projection_tol;
  return rep;
}

std::vector<CheckReport> run_battery(bool quick) {
  std::vector<CheckReport> out;

  out.push_back(inverse_neumann_check(Grid::line(1.0, 64), 7));
  out.push_back(inverse_neumann_check(Grid::rect(1.0, 1.0, quick ? 16 : 32, quick ? 16 : 32), 11));

  {
    const auto prob = quick ? regular_reference_1d(32, 32, 0.5) : regular_reference_1d(64, 128, 0.5);
    const auto& g = prob.state.grid;
    const auto& t = prob.state.time;
    const auto u = reference_control(g, t);
    const auto h = reference_direction(g, t);
    out.push_back(fd_gradient_check(prob, u, h, {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}));
    SpaceTimeField h_lin = h;
    for (std::size_t n = 0; n < h_lin.size(); ++n) h_lin[n] *= 10.0;
    out.push_back(linearization_order_check(prob, u, h_lin, {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}));
    out.push_back(duality_gap_check(prob, u, h));
    const auto traj = solve_state(prob.state, u);
    auto mb = mass_balance_check(traj, prob.state.source, prob.state.params.gamma, g, t);
    mb.setup = describe(prob.state);
    out.push_back(mb);
  }
  {
    auto prob = regular_reference_1d(32, 16, 0.5);
    prob.state.potential = PotentialSpec::quadratic();
    const auto u = reference_control(prob.state.grid, prob.state.time);
    const auto h = reference_direction(prob.state.grid, prob.state.time);
    auto rep = linearization_order_check(prob, u, h, {1e-1, 1e-2, 1e-3});
    rep.name += "_linear_system";
    out.push_back(rep);
  }
  {
    const auto prob = regular_reference_2d(16, 16, 0.5);
    const auto u = reference_control(prob.state.grid, prob.state.time);
    const auto h = reference_direction(prob.state.grid, prob.state.time);
    out.push_back(duality_gap_check(prob, u, h));
  }
  out.push_back(duality_refinement_check(
      [](int nt) {
        auto prob = regular_reference_1d(32, nt, 0.5);
        const auto u = reference_control(prob.state.grid, prob.state.time);
        const auto h = reference_direction(prob.state.grid, prob.state.time);
        return DualityInstance{prob, u, h};
      },
      quick ? 32 : 64));
  {
    // Unforced decay of the mean.
    auto sys = regular_reference_1d(32, 40, 1.0).state;
    sys.source = SpaceTimeField(sys.grid, sys.time);
    sys.init.phi0.array() += 0.25;
    const auto traj = solve_state(sys, reference_control(sys.grid, sys.time));
    auto rep = mass_balance_check(traj, sys.source, sys.params.gamma, sys.grid, sys.time);
    rep.name += "_unforced";
    rep.setup = describe(sys);
    out.push_back(rep);
  }
  {
    const Grid g = Grid::rect(1.0, 1.0, 8, 8);
    const TimeGrid t(1.0, 20);
    StateSystem sys{g, t, PhysicalParams{}, PotentialSpec::regular(),
                    InitialData{g.constant(0.3), g.constant(0.1), g.constant(0.2)},
                    SpaceTimeField(g, t, 0.3), NewtonConfig{}};
    out.push_back(uniform_state_check(sys));
  }
  {
    const auto sys = quick ? logarithmic_reference_2d(24, 50, 0.1) : logarithmic_reference_2d(48, 100, 0.1);
    const auto u = bounded_heat_source(sys.grid, sys.time);
    out.push_back(separation_check(sys, u));
    const auto traj = solve_state(sys, u);
    auto rep = mass_balance_check(traj, sys.source, sys.params.gamma, sys.grid, sys.time);
    rep.name += "_logarithmic";
    rep.setup = describe(sys);
    out.push_back(rep);
  }
  {
    OptimizeConfig cfg;
    cfg.stationarity_tol = 1e-4;
    out.push_back(inverse_source_check(quick ? inverse_source_case(24, 24, 0.5, 1e-4)
                                             : inverse_source_case(32, 32, 0.5, 1e-4),
                                       cfg));
  }
  out.push_back(mms_convergence_check(1, MmsKind::Constant, {8, 16, 32}));
  out.push_back(mms_convergence_check(1, MmsKind::Space, {16, 32, 64}));
  out.push_back(mms_convergence_check(1, MmsKind::Time, {20, 40, 80}));
  out.push_back(mms_convergence_check(2, MmsKind::Space, quick ? std::vector<int>{8, 16, 32}
                                                               : std::vector<int>{16, 32, 64}));
  out.push_back(mms_convergence_check(2, MmsKind::Time, {20, 40, 80}));
  return out;
}

}  // namespace nch
