#include "step_operator.hpp"

#include "nch/errors.hpp"

namespace nch::detail {

StepOperator::StepOperator(const Grid& grid, const PhysicalParams& params, double tau)
    : n_(static_cast<Eigen::Index>(grid.size())),
      params_(params),
      tau_(tau),
      lap_(laplacian_matrix(grid)) {}

SparseMatrix StepOperator::assemble(const Field& curvature) const {
  const Eigen::Index n = n_;
  const double diag_phi = 1.0 / tau_ + params_.gamma;
  const double heat = params_.kappa1 + params_.kappa2 * tau_;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(lap_.nonZeros()) * 3 + static_cast<std::size_t>(n) * 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    trip.emplace_back(i, i, diag_phi);
    trip.emplace_back(n + i, n + i, 1.0);
    trip.emplace_back(n + i, 2 * n + i, params_.b);
    trip.emplace_back(n + i, i, -curvature[i]);
    trip.emplace_back(2 * n + i, i, params_.lambda / tau_);
    trip.emplace_back(2 * n + i, 2 * n + i, 1.0 / tau_);
  }
  for (Eigen::Index k = 0; k < lap_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(lap_, k); it; ++it) {
      const Eigen::Index r = it.row();
      const Eigen::Index c = it.col();
      trip.emplace_back(r, n + c, -it.value());
      trip.emplace_back(n + r, c, it.value());
      trip.emplace_back(2 * n + r, 2 * n + c, -heat * it.value());
    }
  }
  SparseMatrix m(3 * n, 3 * n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

void StepOperator::factorize(const Field& curvature, bool transpose) {
  SparseMatrix m = assemble(curvature);
  if (transpose) {
    SparseMatrix mt = m.transpose();
    mt.makeCompressed();
    m = std::move(mt);
  }
  const Pattern wanted = transpose ? Pattern::Transposed : Pattern::Plain;
  if (pattern_ != wanted) {
    lu_.analyzePattern(m);
    pattern_ = wanted;
  }
  lu_.factorize(m);
  if (lu_.info() != Eigen::Success) {
    throw SensitivityError("sparse LU factorization of the step operator failed");
  }
}

Eigen::VectorXd StepOperator::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) {
    throw SensitivityError("sparse LU solve of the step operator failed");
  }
  return x;
}

}  // namespace nch::detail
