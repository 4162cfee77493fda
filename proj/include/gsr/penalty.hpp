#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gsr {

enum class PenaltyKind { Lp, Scad, Logarithm, Mcp, Etp, CappedL1, Geman, Laplace };

inline constexpr std::array<PenaltyKind, 8> all_penalty_kinds{
  PenaltyKind::Lp,  PenaltyKind::Scad,     PenaltyKind::Logarithm, PenaltyKind::Mcp,
  PenaltyKind::Etp, PenaltyKind::CappedL1, PenaltyKind::Geman,     PenaltyKind::Laplace};

// Config spelling: lp, scad, log, mcp, etp, capped_l1, geman, laplace.
std::string_view penalty_name(PenaltyKind kind);
std::optional<PenaltyKind> parse_penalty_kind(std::string_view name);
std::string penalty_kind_list();

// Concave, nondecreasing surrogate of the l0 "norm" on [0, inf).
//
// `shape` is the exponent p in (0, 1) for Lp, and gamma for every other kind
// (SCAD needs gamma > 2). lambda = 0 is accepted and gives the zero penalty.
class Penalty {
public:
  Penalty(PenaltyKind kind, double lambda, double shape);

  PenaltyKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double shape() const { return shape_; }

  // rho(theta); throws DomainError for theta < 0.
  double value(double theta) const;

  // A super-gradient of rho at theta. Lp at 0 gives +inf. At the Capped-L1
  // kink (theta == gamma) the super-differential is [0, lambda] and the
  // midpoint lambda / 2 is returned.
  double supergradient(double theta) const;

  // Points where rho or its super-gradient switch formula.
  std::vector<double> breakpoints() const;

private:
  PenaltyKind kind_;
  double lambda_;
  double shape_;
};

inline constexpr double infinite_weight = std::numeric_limits<double>::infinity();

} // namespace gsr
