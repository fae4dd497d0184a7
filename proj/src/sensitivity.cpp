#include "nch/sensitivity.hpp"

#include <cmath>

#include "nch/errors.hpp"
#include "step_operator.hpp"

namespace nch {

std::string to_string(AdjointMode mode) {
  return mode == AdjointMode::Transpose ? "transpose" : "continuous";
}

AdjointMode adjoint_mode_from_string(const std::string& s) {
  if (s == "transpose") return AdjointMode::Transpose;
  if (s == "continuous") return AdjointMode::Continuous;
  throw PreconditionError("unknown adjoint mode '" + s + "'");
}

CostData CostData::zero_targets(const Grid& g, const TimeGrid& t, std::array<double, 6> alpha,
                                double nu) {
  CostData c;
  c.alpha = alpha;
  c.nu = nu;
  c.phi_Q = SpaceTimeField(g, t);
  c.w_Q = SpaceTimeField(g, t);
  c.dw_Q = SpaceTimeField(g, t);
  c.phi_Omega = g.zeros();
  c.w_Omega = g.zeros();
  c.dw_Omega = g.zeros();
  return c;
}

void CostData::validate(const Grid& g, const TimeGrid& t) const {
  bool any = nu > 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw PreconditionError("cost weights must be nonnegative");
    }
    any = any || a > 0.0;
  }
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw PreconditionError("nu must be nonnegative");
  if (!any) throw PreconditionError("cost weights and nu must not all vanish");
  require_conforming(phi_Q, g, t);
  require_conforming(w_Q, g, t);
  require_conforming(dw_Q, g, t);
  require_conforming(phi_Omega, g);
  require_conforming(w_Omega, g);
  require_conforming(dw_Omega, g);
}

SpaceTimeField AdjointTrajectory::control_sensitivity() const {
  if (mode == AdjointMode::Continuous) return r;
  SpaceTimeField out = r;
  for (std::size_t n = out.size() - 1; n >= 1; --n) out[n] = r[n - 1];
  out[0].setZero();
  return out;
}

namespace {

void require_base(const StateSystem& sys, const StateTrajectory& base) {
  require_conforming(base.phi, sys.grid, sys.time);
  require_conforming(base.w, sys.grid, sys.time);
  require_conforming(base.v, sys.grid, sys.time);
}

}  // namespace

LinearizedTrajectory solve_linearized(const StateSystem& sys, const StateTrajectory& base,
                                      const SpaceTimeField& h, AdjointMode mode) {
  require_base(sys, base);
  require_conforming(h, sys.grid, sys.time);
  const auto& pot = sys.potential;
  const auto& prm = sys.params;
  const double tau = sys.time.tau();
  const Eigen::Index n = static_cast<Eigen::Index>(sys.grid.size());

  LinearizedTrajectory lin{SpaceTimeField(sys.grid, sys.time), SpaceTimeField(sys.grid, sys.time),
                           SpaceTimeField(sys.grid, sys.time), SpaceTimeField(sys.grid, sys.time)};
  detail::StepOperator op(sys.grid, prm, tau);
  const auto& lap = op.laplacian();
  Field curvature(n);
  Eigen::VectorXd rhs(3 * n);

  for (int k = 0; k < sys.time.steps(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const Field& phi_new = base.phi[kk + 1];
    const Field& phi_old = base.phi[kk];
    const Field& xi = lin.xi[kk];
    rhs.segment(0, n) = xi / tau;
    for (Eigen::Index i = 0; i < n; ++i) {
      curvature[i] = convex_part_clipped(pot, phi_new[i], 2);
      if (mode == AdjointMode::Transpose) {
        rhs[n + i] = concave_part(pot, phi_old[i], 2) * xi[i];
      } else {
        curvature[i] += concave_part(pot, phi_new[i], 2);
        rhs[n + i] = 0.0;
      }
    }
    rhs.segment(2 * n, n) = lin.dzeta[kk] / tau + prm.kappa2 * (lap * lin.zeta[kk]) +
                            prm.lambda * xi / tau + h[kk + 1];
    op.factorize(curvature);
    const Eigen::VectorXd x = op.solve(rhs);
    lin.xi[kk + 1] = x.segment(0, n);
    lin.eta[kk + 1] = x.segment(n, n);
    lin.dzeta[kk + 1] = x.segment(2 * n, n);
    lin.zeta[kk + 1] = lin.zeta[kk] + tau * lin.dzeta[kk + 1];
  }
  return lin;
}

AdjointTrajectory solve_adjoint(const StateSystem& sys, const StateTrajectory& base,
                                const CostData& cost, AdjointMode mode) {
  require_base(sys, base);
  cost.validate(sys.grid, sys.time);
  const auto& pot = sys.potential;
  const auto& prm = sys.params;
  const auto& al = cost.alpha;
  const double tau = sys.time.tau();
  const int nt = sys.time.steps();
  const auto last = static_cast<std::size_t>(nt);
  const Eigen::Index n = static_cast<Eigen::Index>(sys.grid.size());
  const bool transpose = mode == AdjointMode::Transpose;

  AdjointTrajectory adj{SpaceTimeField(sys.grid, sys.time), SpaceTimeField(sys.grid, sys.time),
                        SpaceTimeField(sys.grid, sys.time), SpaceTimeField(sys.grid, sys.time),
                        mode};

  // Final data.
  const Field dw_mis = base.v[last] - cost.dw_Omega;
  adj.r[last] = al[5] * dw_mis;
  adj.p[last] = al[1] * (base.phi[last] - cost.phi_Omega) - prm.lambda * al[5] * dw_mis;
  adj.q[last] = -laplacian_neumann(adj.p[last], sys.grid);
  adj.R[last].setZero();

  // Time-integrated w misfit: left-endpoint sums for the continuous adjoint,
  // right-endpoint sums (the cost quadrature) for the transposed scheme.
  SpaceTimeField w_mis = base.w - cost.w_Q;
  SpaceTimeField w_tail(sys.grid, sys.time);
  if (transpose) {
    for (std::size_t j = last; j-- > 0;) w_tail[j] = w_tail[j + 1] + tau * w_mis[j + 1];
  } else {
    w_tail = conv_backward(w_mis, sys.time);
  }
  const Field w_final = al[3] * (base.w[last] - cost.w_Omega);

  detail::StepOperator op(sys.grid, prm, tau);
  const auto& lap = op.laplacian();
  Field curvature(n);
  Eigen::VectorXd rhs(3 * n);

  for (std::size_t k = last; k-- > 0;) {
    const std::size_t s = transpose ? k + 1 : k;  // state level the step sees
    const Field& phi = base.phi[s];
    // The final level is final data, not a step multiplier: its q does not
    // enter the lagged pi' coupling.
    const bool next_is_final = k + 1 == last;
    for (Eigen::Index i = 0; i < n; ++i) {
      curvature[i] = convex_part_clipped(pot, phi[i], 2);
      double lag = 0.0;
      if (transpose) {
        if (!next_is_final) lag = concave_part(pot, phi[i], 2) * adj.q[k + 1][i];
      } else {
        curvature[i] += concave_part(pot, phi[i], 2);
      }
      rhs[i] = al[0] * (phi[i] - cost.phi_Q[s][i]) +
               (adj.p[k + 1][i] + prm.lambda * adj.r[k + 1][i]) / tau - lag;
    }
    rhs.segment(n, n).setZero();
    rhs.segment(2 * n, n) = al[4] * (base.v[s] - cost.dw_Q[s]) + al[2] * w_tail[k] + w_final +
                            adj.r[k + 1] / tau + prm.kappa2 * (lap * adj.R[k + 1]);
    op.factorize(curvature, /*transpose=*/true);
    const Eigen::VectorXd y = op.solve(rhs);
    adj.p[k] = y.segment(0, n);
    adj.q[k] = -y.segment(n, n);
    adj.r[k] = y.segment(2 * n, n);
    adj.R[k] = adj.R[k + 1] + tau * adj.r[k];
  }
  return adj;
}

double tracking_pairing(const StateSystem& sys, const StateTrajectory& base,
                        const LinearizedTrajectory& lin, const CostData& cost) {
  const auto& al = cost.alpha;
  const double vol = sys.grid.cell_volume();
  const double tau = sys.time.tau();
  const auto last = static_cast<std::size_t>(sys.time.steps());
  double running = 0.0;
  for (std::size_t n = 1; n <= last; ++n) {
    running += al[0] * (base.phi[n] - cost.phi_Q[n]).dot(lin.xi[n]);
    running += al[2] * (base.w[n] - cost.w_Q[n]).dot(lin.zeta[n]);
    running += al[4] * (base.v[n] - cost.dw_Q[n]).dot(lin.dzeta[n]);
  }
  double final_terms = al[1] * (base.phi[last] - cost.phi_Omega).dot(lin.xi[last]) +
                       al[3] * (base.w[last] - cost.w_Omega).dot(lin.zeta[last]) +
                       al[5] * (base.v[last] - cost.dw_Omega).dot(lin.dzeta[last]);
  return vol * (tau * running + final_terms);
}

}  // namespace nch
