#pragma once

#include <limits>
#include <string>
#include <vector>

#include "nch/geometry.hpp"

namespace nch {

/// Double-well potential F = beta_hat + pi_hat, beta_hat convex with
/// beta_hat(0) = 0 and pi_hat smooth with Lipschitz derivative.
///
///   Regular:     beta_hat = r^4/4,                    pi_hat = 1/4 - r^2/2
///   Logarithmic: beta_hat = (1+r)ln(1+r)+(1-r)ln(1-r), pi_hat = -c1 r^2
///   Quadratic:   beta_hat = r^2/2,                    pi_hat = 0
///
/// Quadratic makes the state system linear; it only exists so that the
/// verification suite can exercise the zero-remainder case.
enum class PotentialKind { Regular, Logarithmic, Quadratic };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Regular;
  double c1 = 2.0;
  double clip_margin = 1e-9;

  static PotentialSpec regular() { return {PotentialKind::Regular, 2.0, 1e-9}; }
  static PotentialSpec logarithmic(double c1 = 2.0, double clip_margin = 1e-9);
  static PotentialSpec quadratic() { return {PotentialKind::Quadratic, 2.0, 1e-9}; }

  /// Endpoints of D(beta): -inf/+inf or -1/+1.
  double lower() const noexcept;
  double upper() const noexcept;
  bool singular() const noexcept { return kind == PotentialKind::Logarithmic; }

  /// Throws PreconditionError when c1 <= 1 or the clip margin is outside (0, 0.5).
  void validate() const;
};

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& s);

/// F^(order)(r), order in 0..3. Logarithmic orders >= 1 need |r| < 1;
/// order 0 accepts |r| <= 1 with 0 ln 0 = 0. Throws DomainError otherwise.
double F_eval(const PotentialSpec& spec, double r, int order);
/// Convex part: beta_hat (order 0), beta (1), beta' (2), beta'' (3).
double convex_part(const PotentialSpec& spec, double r, int order);
/// Smooth part: pi_hat (order 0), pi (1), pi' (2), pi'' (3).
double concave_part(const PotentialSpec& spec, double r, int order);

/// Projects r into [r- + margin, r+ - margin] (identity for nonsingular kinds).
double clip(const PotentialSpec& spec, double r) noexcept;
double F_eval_clipped(const PotentialSpec& spec, double r, int order);
double convex_part_clipped(const PotentialSpec& spec, double r, int order);
/// Number of entries of phi that lie outside the unclipped band.
int count_clipped(const PotentialSpec& spec, const Field& phi) noexcept;

struct CompatibilityEntry {
  std::string name;
  double value;
  bool pass;
};

/// Checks that inf phi0, sup phi0, -rho - (mean phi0)^-, rho + (mean phi0)^+
/// lie in the open interval (r-, r+), rho = ||f||_inf / gamma.
struct CompatibilityReport {
  std::vector<CompatibilityEntry> entries;
  bool pass = true;
};

CompatibilityReport validate_compatibility(const PotentialSpec& spec, const Field& phi0,
                                           const SpaceTimeField& f, double gamma,
                                           const Grid& grid);

struct SeparationReport {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double margin_lo = std::numeric_limits<double>::infinity();
  double margin_hi = std::numeric_limits<double>::infinity();
  bool separated() const noexcept { return margin_lo > 0.0 && margin_hi > 0.0; }
};

SeparationReport separation_report(const SpaceTimeField& phi, const PotentialSpec& spec);

}  // namespace nch
