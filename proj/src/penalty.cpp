#include "gsr/penalty.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

std::string_view penalty_name(PenaltyKind kind)
{
  switch (kind) {
  case PenaltyKind::Lp: return "lp";
  case PenaltyKind::Scad: return "scad";
  case PenaltyKind::Logarithm: return "log";
  case PenaltyKind::Mcp: return "mcp";
  case PenaltyKind::Etp: return "etp";
  case PenaltyKind::CappedL1: return "capped_l1";
  case PenaltyKind::Geman: return "geman";
  case PenaltyKind::Laplace: return "laplace";
  }
  return "?";
}

std::optional<PenaltyKind> parse_penalty_kind(std::string_view name)
{
  for (auto kind : all_penalty_kinds) {
    if (penalty_name(kind) == name) { return kind; }
  }
  return std::nullopt;
}

std::string penalty_kind_list()
{
  std::string out;
  for (auto kind : all_penalty_kinds) {
    if (!out.empty()) { out += '|'; }
    out += penalty_name(kind);
  }
  return out;
}

Penalty::Penalty(PenaltyKind kind, double lambda, double shape)
  : kind_{kind}
  , lambda_{lambda}
  , shape_{shape}
{
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ContractError(fmt::format("penalty lambda must be finite and >= 0 (got {})", lambda));
  }
  if (!std::isfinite(shape) || shape <= 0.0) {
    throw ContractError(fmt::format("penalty shape must be finite and > 0 (got {})", shape));
  }
  if (kind == PenaltyKind::Lp && shape >= 1.0) {
    throw ContractError(fmt::format("lp exponent must lie in (0, 1) (got {})", shape));
  }
  if (kind == PenaltyKind::Scad && shape <= 2.0) {
    throw ContractError(fmt::format("scad gamma must exceed 2 (got {})", shape));
  }
}

namespace {

void check_domain(double theta)
{
  if (!(theta >= 0.0)) { throw DomainError(fmt::format("penalty argument must be >= 0 (got {})", theta)); }
}

} // namespace

double Penalty::value(double theta) const
{
  check_domain(theta);
  double const l = lambda_;
  double const g = shape_;
  switch (kind_) {
  case PenaltyKind::Lp:
    return l * std::pow(theta, g);
  case PenaltyKind::Scad:
    if (theta <= l) { return l * theta; }
    if (theta <= g * l) { return (-theta * theta + 2.0 * g * l * theta - l * l) / (2.0 * (g - 1.0)); }
    return l * l * (g + 1.0) / 2.0;
  case PenaltyKind::Logarithm:
    return l / std::log(g + 1.0) * std::log1p(g * theta);
  case PenaltyKind::Mcp:
    if (theta < g * l) { return l * theta - theta * theta / (2.0 * g); }
    return g * l * l / 2.0;
  case PenaltyKind::Etp:
    return l / -std::expm1(-g) * -std::expm1(-g * theta);
  case PenaltyKind::CappedL1:
    return theta < g ? l * theta : l * g;
  case PenaltyKind::Geman:
    return l * theta / (theta + g);
  case PenaltyKind::Laplace:
    return l * -std::expm1(-theta / g);
  }
  return 0.0;
}

double Penalty::supergradient(double theta) const
{
  check_domain(theta);
  double const l = lambda_;
  double const g = shape_;
  if (l == 0.0) { return 0.0; }
  switch (kind_) {
  case PenaltyKind::Lp:
    if (theta == 0.0) { return infinite_weight; }
    return l * g * std::pow(theta, g - 1.0);
  case PenaltyKind::Scad:
    if (theta <= l) { return l; }
    if (theta <= g * l) { return (g * l - theta) / (g - 1.0); }
    return 0.0;
  case PenaltyKind::Logarithm:
    return g * l / ((g * theta + 1.0) * std::log(g + 1.0));
  case PenaltyKind::Mcp:
    if (theta < g * l) { return l - theta / g; }
    return 0.0;
  case PenaltyKind::Etp:
    return l * g / -std::expm1(-g) * std::exp(-g * theta);
  case PenaltyKind::CappedL1:
    if (theta < g) { return l; }
    if (theta == g) { return l / 2.0; }
    return 0.0;
  case PenaltyKind::Geman:
    return l * g / ((theta + g) * (theta + g));
  case PenaltyKind::Laplace:
    return l / g * std::exp(-theta / g);
  }
  return 0.0;
}

std::vector<double> Penalty::breakpoints() const
{
  switch (kind_) {
  case PenaltyKind::Scad: return {lambda_, shape_ * lambda_};
  case PenaltyKind::Mcp: return {shape_ * lambda_};
  case PenaltyKind::CappedL1: return {shape_};
  default: return {};
  }
}

} // namespace gsr
