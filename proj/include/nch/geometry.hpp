#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nch {

/// Nodal values on the grid, x-index fastest.
using Field = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Cell-centred structured grid on [0,Lx] (1D) or [0,Lx]x[0,Ly] (2D).
///
/// Node (i,j) sits at the centre of its cell; homogeneous Neumann conditions
/// are realised by mirroring the first/last interior value into the ghost
/// layer, which gives a symmetric Laplacian with exact zero row sums.
class Grid {
 public:
  static Grid line(double lx, int nx);
  static Grid rect(double lx, double ly, int nx, int ny);

  int dim() const noexcept { return dim_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return lx_ / nx_; }
  double hy() const noexcept { return dim_ == 2 ? ly_ / ny_ : 1.0; }

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  }
  Eigen::Index index(int i, int j = 0) const noexcept {
    return static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(nx_) * j;
  }
  double cell_volume() const noexcept { return hx() * hy(); }
  /// |Omega| as cell volume times node count.
  double volume() const noexcept { return cell_volume() * static_cast<double>(size()); }

  double x(int i) const noexcept { return (i + 0.5) * hx(); }
  double y(int j) const noexcept { return dim_ == 2 ? (j + 0.5) * hy() : 0.0; }

  Field zeros() const { return Field::Zero(static_cast<Eigen::Index>(size())); }
  Field constant(double c) const {
    return Field::Constant(static_cast<Eigen::Index>(size()), c);
  }
  /// Samples f(x, y) at every node (y = 0 in 1D).
  Field sample(const std::function<double(double, double)>& f) const;

  bool operator==(const Grid&) const = default;

 private:
  Grid(int dim, double lx, double ly, int nx, int ny);

  int dim_;
  double lx_;
  double ly_;
  int nx_;
  int ny_;
};

/// Uniform partition of [0,T] into nt steps.
class TimeGrid {
 public:
  TimeGrid(double final_time, int steps);

  double final_time() const noexcept { return final_time_; }
  int steps() const noexcept { return steps_; }
  double tau() const noexcept { return final_time_ / steps_; }
  double t(int n) const noexcept { return n * tau(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  double final_time_;
  int steps_;
};

/// One Field per time node n = 0..nt.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(const Grid& grid, const TimeGrid& time, double value = 0.0);
  SpaceTimeField(std::vector<Field> slices) : slices_(std::move(slices)) {}

  /// Samples f(x, y, t) at every node and time level.
  static SpaceTimeField sample(const Grid& grid, const TimeGrid& time,
                               const std::function<double(double, double, double)>& f);

  std::size_t size() const noexcept { return slices_.size(); }
  int steps() const noexcept { return static_cast<int>(slices_.size()) - 1; }
  Field& operator[](std::size_t n) { return slices_[n]; }
  const Field& operator[](std::size_t n) const { return slices_[n]; }
  Field& back() { return slices_.back(); }
  const Field& back() const { return slices_.back(); }
  auto begin() { return slices_.begin(); }
  auto end() { return slices_.end(); }
  auto begin() const { return slices_.begin(); }
  auto end() const { return slices_.end(); }

  SpaceTimeField& operator+=(const SpaceTimeField& o);
  SpaceTimeField& operator-=(const SpaceTimeField& o);
  SpaceTimeField& operator*=(double s);
  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
  friend SpaceTimeField operator*(double s, SpaceTimeField a) { return a *= s; }

  /// a + s * b, slice by slice.
  static SpaceTimeField axpy(const SpaceTimeField& a, double s, const SpaceTimeField& b);

  double max_abs() const;

 private:
  std::vector<Field> slices_;
};

void require_conforming(const Field& f, const Grid& g);
void require_conforming(const SpaceTimeField& f, const Grid& g, const TimeGrid& t);

/// Sparse matrix of the mirrored-ghost Neumann Laplacian.
SparseMatrix laplacian_matrix(const Grid& g);

/// Matrix-free application of the Neumann Laplacian.
Field laplacian_neumann(const Field& f, const Grid& g);

/// Volume-weighted average (1/|Omega|) <f, 1>.
double mean(const Field& f, const Grid& g);

/// L2(Omega) inner product with cell-volume weights.
double inner(const Field& f, const Field& h, const Grid& g);
double l2_norm(const Field& f, const Grid& g);
/// Squared discrete gradient norm from one-sided face differences.
double grad_norm_sq(const Field& f, const Grid& g);
double h1_norm(const Field& f, const Grid& g);

struct CgOptions {
  double rel_tol = 1e-12;
  int max_iter = 0;  // 0: 10 * node count
};

/// Inverse of -Laplacian on zero-mean fields: returns z with mean 0 and
/// -Lap z = psi. Conjugate gradient restricted to the zero-mean subspace.
/// Throws PreconditionError if |mean(psi)| > 1e-10 ||psi||_inf.
Field inverse_neumann(const Field& psi, const Grid& g, const CgOptions& opts = {});

/// Dual (V*) norm: sqrt(||grad N(psi - mean)||^2 + mean^2).
double dual_norm(const Field& psi, const Grid& g);

/// (1 * v)(t_n) = tau * sum_{m=1..n} v^m   (right-endpoint rule).
SpaceTimeField conv_forward(const SpaceTimeField& v, const TimeGrid& t);
/// (1 (*) v)(t_n) = tau * sum_{m=n..nt-1} v^m   (left-endpoint rule).
SpaceTimeField conv_backward(const SpaceTimeField& v, const TimeGrid& t);

/// L2(Q) inner product, rectangle rule over the time levels 1..nt.
double inner_q(const SpaceTimeField& a, const SpaceTimeField& b, const Grid& g,
               const TimeGrid& t);
double norm_q(const SpaceTimeField& a, const Grid& g, const TimeGrid& t);

}  // namespace nch
