#pragma once

// Block operator shared by the Newton iteration, the linearized solve and the
// adjoint solve. Unknowns are stacked as [phi | mu | v] (or their
// linearized/adjoint counterparts), each block one value per node.

#include <Eigen/SparseLU>

#include "nch/geometry.hpp"
#include "nch/state_solver.hpp"

namespace nch::detail {

class StepOperator {
 public:
  StepOperator(const Grid& grid, const PhysicalParams& params, double tau);

  Eigen::Index nodes() const noexcept { return n_; }
  const SparseMatrix& laplacian() const noexcept { return lap_; }

  /// Jacobian of the step residual with `curvature` on the phi-diagonal of the
  /// chemical-potential row:
  ///   [ (1/tau + gamma) I      -L         0                     ]
  ///   [ L - diag(curvature)     I         b I                   ]
  ///   [ (lambda/tau) I          0         I/tau - (k1+k2 tau) L ]
  SparseMatrix assemble(const Field& curvature) const;

  /// Factorizes assemble(curvature) (or its transpose) for repeated solves.
  void factorize(const Field& curvature, bool transpose = false);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::Index n_;
  PhysicalParams params_;
  double tau_;
  SparseMatrix lap_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  enum class Pattern { None, Plain, Transposed };
  Pattern pattern_ = Pattern::None;
};

}  // namespace nch::detail
