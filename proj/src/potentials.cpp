#include "nch/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "nch/errors.hpp"

namespace nch {

PotentialSpec PotentialSpec::logarithmic(double c1, double clip_margin) {
  PotentialSpec s{PotentialKind::Logarithmic, c1, clip_margin};
  s.validate();
  return s;
}

double PotentialSpec::lower() const noexcept {
  return singular() ? -1.0 : -std::numeric_limits<double>::infinity();
}

double PotentialSpec::upper() const noexcept {
  return singular() ? 1.0 : std::numeric_limits<double>::infinity();
}

void PotentialSpec::validate() const {
  if (kind == PotentialKind::Logarithmic && !(c1 > 1.0)) {
    throw PreconditionError("logarithmic potential needs c1 > 1");
  }
  if (!(clip_margin > 0.0 && clip_margin < 0.5)) {
    throw PreconditionError("clip margin must lie in (0, 0.5)");
  }
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Regular: return "regular";
    case PotentialKind::Logarithmic: return "logarithmic";
    case PotentialKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "regular") return PotentialKind::Regular;
  if (s == "logarithmic" || s == "log") return PotentialKind::Logarithmic;
  if (s == "quadratic") return PotentialKind::Quadratic;
  throw PreconditionError("unknown potential kind '" + s + "'");
}

namespace {

void check_order(int order) {
  if (order < 0 || order > 3) throw PreconditionError("potential derivative order must be 0..3");
}

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

double log_convex(double r, int order) {
  if (order == 0) {
    if (std::abs(r) > 1.0) throw DomainError("logarithmic potential undefined for |r| > 1");
    return xlogx(1.0 + r) + xlogx(1.0 - r);
  }
  if (!(std::abs(r) < 1.0)) {
    throw DomainError("logarithmic potential derivative needs |r| < 1, got " + std::to_string(r));
  }
  const double s = 1.0 - r * r;
  switch (order) {
    case 1: return std::log1p(r) - std::log1p(-r);
    case 2: return 2.0 / s;
    default: return 4.0 * r / (s * s);
  }
}

}  // namespace

double convex_part(const PotentialSpec& spec, double r, int order) {
  check_order(order);
  switch (spec.kind) {
    case PotentialKind::Regular: {
      const double c[] = {0.25 * r * r * r * r, r * r * r, 3.0 * r * r, 6.0 * r};
      return c[order];
    }
    case PotentialKind::Logarithmic: return log_convex(r, order);
    case PotentialKind::Quadratic: {
      const double c[] = {0.5 * r * r, r, 1.0, 0.0};
      return c[order];
    }
  }
  return 0.0;
}

double concave_part(const PotentialSpec& spec, double r, int order) {
  check_order(order);
  switch (spec.kind) {
    case PotentialKind::Regular: {
      const double c[] = {0.25 - 0.5 * r * r, -r, -1.0, 0.0};
      return c[order];
    }
    case PotentialKind::Logarithmic: {
      const double c[] = {-spec.c1 * r * r, -2.0 * spec.c1 * r, -2.0 * spec.c1, 0.0};
      return c[order];
    }
    case PotentialKind::Quadratic: return 0.0;
  }
  return 0.0;
}

double F_eval(const PotentialSpec& spec, double r, int order) {
  return convex_part(spec, r, order) + concave_part(spec, r, order);
}

double clip(const PotentialSpec& spec, double r) noexcept {
  if (!spec.singular()) return r;
  return std::clamp(r, spec.lower() + spec.clip_margin, spec.upper() - spec.clip_margin);
}

double F_eval_clipped(const PotentialSpec& spec, double r, int order) {
  return F_eval(spec, clip(spec, r), order);
}

double convex_part_clipped(const PotentialSpec& spec, double r, int order) {
  return convex_part(spec, clip(spec, r), order);
}

int count_clipped(const PotentialSpec& spec, const Field& phi) noexcept {
  if (!spec.singular()) return 0;
  int n = 0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (clip(spec, phi[i]) != phi[i]) ++n;
  }
  return n;
}

CompatibilityReport validate_compatibility(const PotentialSpec& spec, const Field& phi0,
                                           const SpaceTimeField& f, double gamma,
                                           const Grid& grid) {
  require_conforming(phi0, grid);
  if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
  const double rho = f.max_abs() / gamma;
  const double m = mean(phi0, grid);
  const double neg = std::max(-m, 0.0);
  const double pos = std::max(m, 0.0);
  CompatibilityReport rep;
  auto add = [&](const char* name, double v) {
    const bool ok = v > spec.lower() && v < spec.upper();
    rep.entries.push_back({name, v, ok});
    rep.pass = rep.pass && ok;
  };
  add("inf phi0", phi0.minCoeff());
  add("sup phi0", phi0.maxCoeff());
  add("-rho - (mean phi0)^-", -rho - neg);
  add("rho + (mean phi0)^+", rho + pos);
  return rep;
}

SeparationReport separation_report(const SpaceTimeField& phi, const PotentialSpec& spec) {
  SeparationReport rep;
  for (const auto& slice : phi) {
    if (slice.size() == 0) continue;
    rep.min = std::min(rep.min, slice.minCoeff());
    rep.max = std::max(rep.max, slice.maxCoeff());
  }
  rep.margin_lo = rep.min - spec.lower();
  rep.margin_hi = spec.upper() - rep.max;
  return rep;
}

}  // namespace nch
