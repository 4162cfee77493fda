#include "gsr/lowrank.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

namespace {

void check_weights(Eigen::VectorXd const &w)
{
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) { throw ContractError(fmt::format("weight {} is negative or NaN ({})", i, w[i])); }
    if (i > 0 && w[i] < w[i - 1]) {
      throw ContractError(fmt::format("weights must be nondecreasing (w[{}] = {} < w[{}] = {})", i, w[i],
                                      i - 1, w[i - 1]));
    }
  }
}

double threshold(double tau, double w)
{
  if (tau == 0.0) { return 0.0; }
  return std::isinf(w) ? w : tau * w;
}

} // namespace

Eigen::VectorXd shrink_spectrum(Eigen::VectorXd const &sigma, Eigen::VectorXd const &weights, double tau)
{
  if (!(tau >= 0.0) || !std::isfinite(tau)) { throw ContractError(fmt::format("tau must be finite and >= 0 (got {})", tau)); }
  if (weights.size() != sigma.size()) {
    throw ContractError(fmt::format("{} weights for {} singular values", weights.size(), sigma.size()));
  }
  check_weights(weights);
  Eigen::VectorXd out(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    out[i] = std::max(sigma[i] - threshold(tau, weights[i]), 0.0);
  }
  return out;
}

Eigen::MatrixXd wsvt(Eigen::MatrixXd const &r, Eigen::VectorXd const &weights, double tau)
{
  auto const f = svd_small(r);
  auto const s = shrink_spectrum(f.sigma, weights, tau);
  return f.U * s.asDiagonal() * f.V.transpose();
}

Eigen::VectorXd reweight(Eigen::VectorXd const &spectrum, Penalty const &pen, WeightingMode const &mode)
{
  Eigen::VectorXd w(spectrum.size());
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    double const s = spectrum[i];
    switch (mode.scheme) {
    case WeightingMode::Scheme::SupergradientOnly: w[i] = pen.supergradient(s); break;
    case WeightingMode::Scheme::Combined: w[i] = pen.supergradient(s) / (std::abs(s) + mode.epsilon); break;
    case WeightingMode::Scheme::Uniform: w[i] = 1.0; break;
    }
  }
  check_weights(w);
  return w;
}

namespace {

// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
constexpr std::array<double, 8> gl_nodes{0.09501250983763745, 0.2816035507792589, 0.45801677765722737,
                                          0.6178762444026438,  0.755404408355003,  0.8656312023878318,
                                          0.9445750230732326,  0.9894009349916499};
constexpr std::array<double, 8> gl_weights{0.18945061045506859, 0.1826034150449236,  0.16915651939500262,
                                            0.14959598881657676, 0.12462897125553403, 0.09515851168249259,
                                            0.062253523938647706, 0.027152459411754037};

template <class F>
double integrate(F const &f, double a, double b, double max_width)
{
  if (!(b > a)) { return 0.0; }
  int const panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
  double const h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    double const mid = a + (k + 0.5) * h;
    double const half = 0.5 * h;
    double panel = 0.0;
    for (std::size_t i = 0; i < gl_nodes.size(); ++i) {
      panel += gl_weights[i] * (f(mid - half * gl_nodes[i]) + f(mid + half * gl_nodes[i]));
    }
    total += panel * half;
  }
  return total;
}

double combined_penalty(Penalty const &pen, double eps, double theta)
{
  if (theta == 0.0 || pen.lambda() == 0.0) { return 0.0; }

  if (pen.kind() == PenaltyKind::Lp) {
    // With v = t^p and v = e^u the integrand becomes lambda e^u / (e^{u/p} + eps),
    // smooth in u with its nearest complex pole p*pi off the real axis.
    double const p = pen.shape();
    double const l = pen.lambda();
    double const lo = p * std::log(eps) - 40.0;
    double const hi = p * std::log(theta);
    auto const f = [&](double u) { return l * std::exp(u) / (std::exp(u / p) + eps); };
    // Below `lo` the integrand is lambda e^u / eps to within e^{-40/p}.
    return l * std::exp(lo) / eps + integrate(f, lo, hi, 2.0 * p);
  }

  // With s = ln(t + eps) the integrand is drho(e^s - eps); split at the
  // penalty's kinks so every panel sees a smooth piece.
  auto const f = [&](double s) { return pen.supergradient(std::max(std::exp(s) - eps, 0.0)); };
  std::vector<double> cuts{std::log(eps)};
  for (double b : pen.breakpoints()) {
    if (b > 0.0 && b < theta) { cuts.push_back(std::log(b + eps)); }
  }
  cuts.push_back(std::log(theta + eps));
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) { total += integrate(f, cuts[i], cuts[i + 1], 2.0); }
  return total;
}

} // namespace

double effective_penalty(Penalty const &pen, WeightingMode const &mode, double theta)
{
  switch (mode.scheme) {
  case WeightingMode::Scheme::SupergradientOnly: return pen.value(theta);
  case WeightingMode::Scheme::Combined:
    if (!(theta >= 0.0)) { throw DomainError(fmt::format("penalty argument must be >= 0 (got {})", theta)); }
    return combined_penalty(pen, mode.epsilon, theta);
  case WeightingMode::Scheme::Uniform:
    if (!(theta >= 0.0)) { throw DomainError(fmt::format("penalty argument must be >= 0 (got {})", theta)); }
    return theta;
  }
  return 0.0;
}

double denoise_objective(Eigen::VectorXd const &zeta, Eigen::VectorXd const &s, Penalty const &pen,
                         WeightingMode const &mode, double tau)
{
  double fit = 0.0;
  double reg = 0.0;
  for (Eigen::Index i = 0; i < zeta.size(); ++i) {
    double const d = zeta[i] - s[i];
    fit += d * d;
    if (tau != 0.0) { reg += effective_penalty(pen, mode, s[i]); }
  }
  return 0.5 * fit + tau * reg;
}

RankCheck rank_sparsity_check(PatchGroup const &group)
{
  auto const f = svd_small(group.matrix);
  RankCheck out;
  if (f.sigma.size() == 0 || f.sigma[0] == 0.0) { return out; }
  double const cutoff = 1e-10 * f.sigma[0];
  for (Eigen::Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma[i] > cutoff) { ++out.rank; }
    double const coefficient = f.U.col(i).dot(group.matrix * f.V.col(i));
    if (std::abs(coefficient) > cutoff) { ++out.nnz_coefficients; }
  }
  return out;
}

DenoiseResult irnn_denoise_group(PatchGroup const &observed, Penalty const &pen, double tau,
                                 WeightingMode const &mode, DenoiseOptions const &options)
{
  if (!(tau >= 0.0) || !std::isfinite(tau)) { throw ContractError(fmt::format("tau must be finite and >= 0 (got {})", tau)); }
  if (options.inner_iters < 1) { throw ContractError("inner_iters must be >= 1"); }
  if (!(mode.epsilon > 0.0)) { throw ContractError("weighting epsilon must be > 0"); }

  // Every iterate is U diag(s) V^T with the observation's singular vectors,
  // so the sweeps only ever touch the spectrum.
  auto const f = svd_small(observed.matrix);
  Eigen::VectorXd const &zeta = f.sigma;
  Eigen::VectorXd s = options.init == InitialWeights::Observation ? zeta : Eigen::VectorXd::Zero(zeta.size());

  DenoiseResult out;
  if (options.track_objective) { out.objective_trace.push_back(denoise_objective(zeta, s, pen, mode, tau)); }
  for (int sweep = 0; sweep < options.inner_iters; ++sweep) {
    Eigen::VectorXd const w = reweight(s, pen, mode);
    Eigen::VectorXd next = shrink_spectrum(zeta, w, tau);
    out.weights_trace.push_back(w);
    if (options.track_objective) { out.objective_trace.push_back(denoise_objective(zeta, next, pen, mode, tau)); }
    double const change = (next - s).norm();
    double const scale = s.norm();
    s = std::move(next);
    if (options.tolerance > 0.0 && change <= options.tolerance * scale) { break; }
  }

  out.sigma = s;
  out.group.positions = observed.positions;
  out.group.ref_index = observed.ref_index;
  out.group.patch_side = observed.patch_side;
  if (s == zeta) {
    // Nothing was shrunk; skip the SVD round trip.
    out.group.matrix = observed.matrix;
  } else {
    out.group.matrix = f.U * s.asDiagonal() * f.V.transpose();
  }
  return out;
}

} // namespace gsr
