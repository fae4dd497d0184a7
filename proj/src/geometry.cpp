#include "nch/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nch/errors.hpp"

namespace nch {

Grid::Grid(int dim, double lx, double ly, int nx, int ny)
    : dim_(dim), lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw PreconditionError("grid extents must be positive and finite");
  }
  if (nx < 4 || (dim == 2 && ny < 4)) {
    throw PreconditionError("grid needs at least 4 nodes per direction");
  }
}

Grid Grid::line(double lx, int nx) { return Grid(1, lx, 1.0, nx, 1); }

Grid Grid::rect(double lx, double ly, int nx, int ny) { return Grid(2, lx, ly, nx, ny); }

Field Grid::sample(const std::function<double(double, double)>& f) const {
  Field out(static_cast<Eigen::Index>(size()));
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) out[index(i, j)] = f(x(i), y(j));
  }
  return out;
}

TimeGrid::TimeGrid(double final_time, int steps) : final_time_(final_time), steps_(steps) {
  if (!(final_time > 0.0) || !std::isfinite(final_time)) {
    throw PreconditionError("final time must be positive");
  }
  if (steps < 2) throw PreconditionError("time grid needs at least 2 steps");
}

SpaceTimeField::SpaceTimeField(const Grid& grid, const TimeGrid& time, double value)
    : slices_(static_cast<std::size_t>(time.steps()) + 1, grid.constant(value)) {}

SpaceTimeField SpaceTimeField::sample(
    const Grid& grid, const TimeGrid& time,
    const std::function<double(double, double, double)>& f) {
  std::vector<Field> slices;
  slices.reserve(static_cast<std::size_t>(time.steps()) + 1);
  for (int n = 0; n <= time.steps(); ++n) {
    const double t = time.t(n);
    slices.push_back(grid.sample([&](double x, double y) { return f(x, y, t); }));
  }
  return SpaceTimeField(std::move(slices));
}

namespace {
void require_same_shape(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (a.size() != b.size()) throw ConformanceError("space-time fields differ in time levels");
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].size() != b[n].size()) {
      throw ConformanceError("space-time fields differ in node count");
    }
  }
}
}  // namespace

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& o) {
  require_same_shape(*this, o);
  for (std::size_t n = 0; n < size(); ++n) slices_[n] += o[n];
  return *this;
}

SpaceTimeField& SpaceTimeField::operator-=(const SpaceTimeField& o) {
  require_same_shape(*this, o);
  for (std::size_t n = 0; n < size(); ++n) slices_[n] -= o[n];
  return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double s) {
  for (auto& f : slices_) f *= s;
  return *this;
}

SpaceTimeField SpaceTimeField::axpy(const SpaceTimeField& a, double s,
                                    const SpaceTimeField& b) {
  require_same_shape(a, b);
  SpaceTimeField out = a;
  for (std::size_t n = 0; n < a.size(); ++n) out[n] += s * b[n];
  return out;
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (const auto& f : slices_) {
    if (f.size() > 0) m = std::max(m, f.cwiseAbs().maxCoeff());
  }
  return m;
}

void require_conforming(const Field& f, const Grid& g) {
  if (static_cast<std::size_t>(f.size()) != g.size()) {
    throw ConformanceError("field has " + std::to_string(f.size()) + " values, grid has " +
                           std::to_string(g.size()) + " nodes");
  }
}

void require_conforming(const SpaceTimeField& f, const Grid& g, const TimeGrid& t) {
  if (f.steps() != t.steps()) {
    throw ConformanceError("space-time field has " + std::to_string(f.size()) +
                           " time levels, expected " + std::to_string(t.steps() + 1));
  }
  for (const auto& slice : f) require_conforming(slice, g);
}

SparseMatrix laplacian_matrix(const Grid& g) {
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = g.dim() == 2 ? 1.0 / (g.hy() * g.hy()) : 0.0;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * 5);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const auto k = g.index(i, j);
      double diag = 0.0;
      // A mirrored ghost cancels the corresponding off-diagonal coupling.
      if (i > 0) {
        trip.emplace_back(k, g.index(i - 1, j), cx);
        diag -= cx;
      }
      if (i < g.nx() - 1) {
        trip.emplace_back(k, g.index(i + 1, j), cx);
        diag -= cx;
      }
      if (g.dim() == 2) {
        if (j > 0) {
          trip.emplace_back(k, g.index(i, j - 1), cy);
          diag -= cy;
        }
        if (j < g.ny() - 1) {
          trip.emplace_back(k, g.index(i, j + 1), cy);
          diag -= cy;
        }
      }
      trip.emplace_back(k, k, diag);
    }
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

Field laplacian_neumann(const Field& f, const Grid& g) {
  require_conforming(f, g);
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = g.dim() == 2 ? 1.0 / (g.hy() * g.hy()) : 0.0;
  Field out(f.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const auto k = g.index(i, j);
      const double c = f[k];
      const double w = i > 0 ? f[g.index(i - 1, j)] : c;
      const double e = i < g.nx() - 1 ? f[g.index(i + 1, j)] : c;
      double v = cx * ((w - c) + (e - c));
      if (g.dim() == 2) {
        const double s = j > 0 ? f[g.index(i, j - 1)] : c;
        const double n = j < g.ny() - 1 ? f[g.index(i, j + 1)] : c;
        v += cy * ((s - c) + (n - c));
      }
      out[k] = v;
    }
  }
  return out;
}

double mean(const Field& f, const Grid& g) {
  require_conforming(f, g);
  return f.sum() * g.cell_volume() / g.volume();
}

double inner(const Field& f, const Field& h, const Grid& g) {
  require_conforming(f, g);
  require_conforming(h, g);
  return g.cell_volume() * f.dot(h);
}

double l2_norm(const Field& f, const Grid& g) { return std::sqrt(inner(f, f, g)); }

double grad_norm_sq(const Field& f, const Grid& g) {
  require_conforming(f, g);
  double sx = 0.0;
  double sy = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const double d = f[g.index(i + 1, j)] - f[g.index(i, j)];
      sx += d * d;
    }
  }
  if (g.dim() == 2) {
    for (int j = 0; j + 1 < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const double d = f[g.index(i, j + 1)] - f[g.index(i, j)];
        sy += d * d;
      }
    }
  }
  double s = sx / (g.hx() * g.hx());
  if (g.dim() == 2) s += sy / (g.hy() * g.hy());
  return g.cell_volume() * s;
}

double h1_norm(const Field& f, const Grid& g) {
  return std::sqrt(inner(f, f, g) + grad_norm_sq(f, g));
}

namespace {
void remove_mean(Field& v) { v.array() -= v.mean(); }
}  // namespace

Field inverse_neumann(const Field& psi, const Grid& g, const CgOptions& opts) {
  require_conforming(psi, g);
  const double scale = psi.size() > 0 ? psi.cwiseAbs().maxCoeff() : 0.0;
  if (std::abs(mean(psi, g)) > 1e-10 * scale) {
    throw PreconditionError("inverse_neumann needs a zero-mean right-hand side");
  }
  Field z = g.zeros();
  if (scale == 0.0) return z;

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * static_cast<int>(g.size());
  Field r = psi;
  remove_mean(r);
  const double target = opts.rel_tol * psi.norm();
  Field p = r;
  double rr = r.squaredNorm();
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (++it > max_iter) {
      throw SolverError("CG for the inverse Neumann operator did not converge",
                        std::sqrt(rr) / psi.norm());
    }
    Field ap = -laplacian_neumann(p, g);
    const double alpha = rr / p.dot(ap);
    z += alpha * p;
    r -= alpha * ap;
    remove_mean(r);
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  remove_mean(z);
  return z;
}

double dual_norm(const Field& psi, const Grid& g) {
  const double m = mean(psi, g);
  Field centred = psi.array() - m;
  if (centred.cwiseAbs().maxCoeff() <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(m)) {
    return std::abs(m);
  }
  const Field z = inverse_neumann(centred, g);
  // ||grad z||^2 = <centred, z> by summation by parts.
  const double grad = std::max(0.0, inner(centred, z, g));
  return std::sqrt(grad + m * m);
}

SpaceTimeField conv_forward(const SpaceTimeField& v, const TimeGrid& t) {
  if (v.steps() != t.steps()) throw ConformanceError("conv_forward: time levels mismatch");
  SpaceTimeField out = v;
  out[0].setZero();
  for (std::size_t n = 1; n < v.size(); ++n) out[n] = out[n - 1] + t.tau() * v[n];
  return out;
}

SpaceTimeField conv_backward(const SpaceTimeField& v, const TimeGrid& t) {
  if (v.steps() != t.steps()) throw ConformanceError("conv_backward: time levels mismatch");
  SpaceTimeField out = v;
  const std::size_t last = v.size() - 1;
  out[last].setZero();
  for (std::size_t n = last; n-- > 0;) out[n] = out[n + 1] + t.tau() * v[n];
  return out;
}

double inner_q(const SpaceTimeField& a, const SpaceTimeField& b, const Grid& g,
               const TimeGrid& t) {
  require_conforming(a, g, t);
  require_conforming(b, g, t);
  double s = 0.0;
  for (std::size_t n = 1; n < a.size(); ++n) s += a[n].dot(b[n]);
  return s * t.tau() * g.cell_volume();
}

double norm_q(const SpaceTimeField& a, const Grid& g, const TimeGrid& t) {
  return std::sqrt(inner_q(a, a, g, t));
}

}  // namespace nch
