#include "gsr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include <fmt/format.h>

#include "gsr/errors.hpp"
#include "gsr/metrics.hpp"

namespace gsr {

void SolverConfig::validate() const
{
  if (!(lambda > 0.0) || !std::isfinite(lambda)) { throw ContractError(fmt::format("lambda must be > 0 (got {})", lambda)); }
  if (!(mu > 0.0) || !std::isfinite(mu)) { throw ContractError(fmt::format("mu must be > 0 (got {})", mu)); }
  if (outer_iters < 1) { throw ContractError("outer_iters must be >= 1"); }
  if (gd_steps < 1) { throw ContractError("gd_steps must be >= 1"); }
  if (inner_iters < 1) { throw ContractError("inner_iters must be >= 1"); }
  if (!(weighting.epsilon > 0.0)) { throw ContractError("weighting epsilon must be > 0"); }
  if (sigma_m && !(*sigma_m > 0.0)) { throw ContractError(fmt::format("sigma_m must be > 0 (got {})", *sigma_m)); }
  if (grouping.patch_side < 1 || grouping.stride < 1 || grouping.group_size < 1 ||
      grouping.window_side < grouping.patch_side) {
    throw ContractError("invalid grouping configuration");
  }
}

double tau_from_config(SolverConfig const &cfg, int n_groups, int n_pixels)
{
  if (n_groups < 1 || n_pixels < 1) { throw ContractError("tau_from_config: counts must be positive"); }
  double const k = static_cast<double>(n_groups) * cfg.grouping.group_size * cfg.grouping.patch_pixels();
  return cfg.lambda * k / (cfg.mu * static_cast<double>(n_pixels));
}

int group_count(int width, int height, GroupingConfig const &cfg)
{
  cfg.validate(width, height);
  return static_cast<int>(reference_anchors(height, cfg.patch_side, cfg.stride).size() *
                          reference_anchors(width, cfg.patch_side, cfg.stride).size());
}

namespace {

void check_sizes(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                 Eigen::VectorXd const &w, Eigen::VectorXd const &x0)
{
  if (y.size() != h.rows() || z.size() != h.cols() || w.size() != h.cols() || x0.size() != h.cols()) {
    throw ContractError("x step: operand sizes do not match the operator");
  }
}

// Shared by both fidelities; the L2 path passes q = 1 so that the two are
// the same arithmetic when every q_i is exactly 1.
XStepResult weighted_descent(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                             Eigen::VectorXd const &w, double mu, Eigen::VectorXd const &q, int steps,
                             Eigen::VectorXd const &x0)
{
  if (steps < 1) { throw ContractError("x step: steps must be >= 1"); }
  if (!(mu >= 0.0)) { throw ContractError("x step: mu must be >= 0"); }

  XStepResult out;
  out.x = x0;
  Eigen::VectorXd hx = h.forward(out.x);
  Eigen::VectorXd const anchor = z + w;

  auto const objective = [&](double &fit) {
    Eigen::VectorXd const r = y - hx;
    fit = 0.5 * (q.array() * r.array().square()).sum();
    return fit + 0.5 * mu * (out.x - anchor).squaredNorm();
  };
  out.objective.push_back(objective(out.data_fit));

  for (int step = 0; step < steps; ++step) {
    Eigen::VectorXd const weighted_residual = (q.array() * (hx - y).array()).matrix();
    Eigen::VectorXd const d = h.adjoint(weighted_residual) + mu * (out.x - anchor);
    double const dd = d.squaredNorm();
    if (dd == 0.0) { break; }
    Eigen::VectorXd const hd = h.forward(d);
    double const curvature = (q.array() * hd.array().square()).sum() + mu * dd;
    if (!(curvature > 0.0)) { break; }
    double const eta = dd / curvature;
    out.x -= eta * d;
    hx -= eta * hd;
    ++out.steps_taken;
    out.objective.push_back(objective(out.data_fit));
  }
  return out;
}

} // namespace

XStepResult x_step_standard(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                            Eigen::VectorXd const &w, double mu, int steps, Eigen::VectorXd const &x0)
{
  check_sizes(y, h, z, w, x0);
  return weighted_descent(y, h, z, w, mu, Eigen::VectorXd::Ones(y.size()), steps, x0);
}

XStepResult x_step_robust(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                          Eigen::VectorXd const &w, double mu, Eigen::VectorXd const &q, int steps,
                          Eigen::VectorXd const &x0)
{
  check_sizes(y, h, z, w, x0);
  if (q.size() != y.size()) { throw ContractError("x step: q has the wrong length"); }
  if (!((q.array() >= 0.0).all())) { throw ContractError("x step: q must be nonnegative"); }
  return weighted_descent(y, h, z, w, mu, q, steps, x0);
}

namespace {

double median(std::vector<double> v)
{
  auto const mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double const upper = v[mid];
  if (v.size() % 2 == 1) { return upper; }
  double const lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

} // namespace

double robust_scale(Eigen::VectorXd const &residual)
{
  if (residual.size() == 0) { return 0.0; }
  std::vector<double> v(residual.data(), residual.data() + residual.size());
  double const center = median(v);
  for (auto &x : v) { x = std::abs(x - center); }
  return 1.4826 * median(std::move(v));
}

Eigen::VectorXd q_update(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &x,
                         double sigma_m)
{
  if (!(sigma_m > 0.0)) { throw ContractError(fmt::format("sigma_m must be > 0 (got {})", sigma_m)); }
  Eigen::VectorXd const r = y - h.forward(x);
  Eigen::VectorXd q(r.size());
  double const s2 = sigma_m * sigma_m;
  for (Eigen::Index i = 0; i < r.size(); ++i) { q[i] = std::max(std::exp(-(r[i] * r[i]) / s2), 1e-300); }
  return q;
}

ZStepResult z_step(Image const &r, SolverConfig const &cfg, double tau)
{
  auto const groups = build_groups(r, cfg.grouping);
  int const n = static_cast<int>(groups.size());
  std::vector<PatchGroup> denoised(groups.size());
  std::vector<double> reg(groups.size(), 0.0);

  DenoiseOptions options;
  options.inner_iters = cfg.inner_iters;
  options.init = cfg.init_weights;
  options.track_objective = false;

  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    try {
      auto const idx = static_cast<std::size_t>(k);
      auto res = irnn_denoise_group(groups[idx], cfg.penalty, tau, cfg.weighting, options);
      double sum = 0.0;
      for (Eigen::Index i = 0; i < res.sigma.size(); ++i) { sum += cfg.penalty.value(res.sigma[i]); }
      reg[idx] = sum;
      denoised[idx] = std::move(res.group);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) { failure = std::current_exception(); }
    }
  }
  if (failure) { std::rethrow_exception(failure); }

  ZStepResult out;
  out.z = aggregate_groups(denoised, r.width(), r.height());
  out.n_groups = n;
  double total = 0.0;
  for (double v : reg) { total += v; }
  out.reg_surrogate = cfg.lambda * total;
  return out;
}

Image multiplier_update(Image const &w, Image const &x, Image const &z)
{
  if (!w.same_shape(x) || !w.same_shape(z)) { throw ContractError("multiplier_update: image sizes differ"); }
  Image out(w.width(), w.height());
  auto const pw = w.pixels();
  auto const px = x.pixels();
  auto const pz = z.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) { po[i] = pw[i] - (px[i] - pz[i]); }
  return out;
}

RecoveryResult recover(Eigen::VectorXd const &y, MeasurementOp const &h, SolverConfig const &cfg,
                       RecoverInputs const &inputs)
{
  cfg.validate();
  if (y.size() != h.rows()) {
    throw ContractError(fmt::format("recover: {} measurements for an operator with {} rows", y.size(), h.rows()));
  }
  int const width = h.width();
  int const height = h.height();
  if (inputs.ground_truth && (inputs.ground_truth->width() != width || inputs.ground_truth->height() != height)) {
    throw ContractError("recover: ground truth size differs from the operator's image size");
  }

  Image x;
  if (cfg.init == InitMode::GivenImage) {
    if (!inputs.initial) { throw ContractError("recover: init=given but no initial image supplied"); }
    if (inputs.initial->width() != width || inputs.initial->height() != height) {
      throw ContractError("recover: initial image size differs from the operator's image size");
    }
    x = *inputs.initial;
  } else {
    x = h.adjoint_image(y);
  }
  Image z = x;
  Image w(width, height, 0.0);

  RecoveryResult out;
  out.tau = tau_from_config(cfg, group_count(width, height, cfg.grouping), width * height);

  Eigen::VectorXd const ones = Eigen::VectorXd::Ones(y.size());
  for (int t = 1; t <= cfg.outer_iters; ++t) {
    // Descent starts at the prox centre Z + W: its null-space component is
    // already optimal, so the few steps only have to fix the row space of H.
    // The half-quadratic weights are taken at the same point. The previous X
    // nearly interpolates y whenever M < N, so its residual says little about
    // which measurements are outliers.
    Eigen::VectorXd const centre = z.vec() + w.vec();
    Eigen::VectorXd q = ones;
    if (cfg.fidelity == Fidelity::MEstimator) {
      double sigma = 0.0;
      Eigen::VectorXd const r = y - h.forward(centre);
      if (cfg.sigma_m) {
        sigma = *cfg.sigma_m;
      } else {
        sigma = robust_scale(r);
        if (!(sigma > 0.0)) { sigma = std::sqrt(r.squaredNorm() / static_cast<double>(r.size())); }
      }
      if (sigma > 0.0) { q = q_update(y, h, centre, sigma); }
    }

    auto xs = weighted_descent(y, h, z.vec(), w.vec(), cfg.mu, q, cfg.gd_steps, centre);
    x = Image::from_vector(width, height, xs.x);

    Image r(width, height);
    r.vec() = x.vec() - w.vec();
    auto zs = z_step(r, cfg, out.tau);
    z = std::move(zs.z);
    w = multiplier_update(w, x, z);

    TraceRecord rec;
    rec.iter = t;
    rec.data_fidelity = xs.data_fit;
    rec.reg_surrogate = zs.reg_surrogate;
    rec.x_minus_z_norm = (x.vec() - z.vec()).norm();
    if (inputs.ground_truth) { rec.psnr = psnr(x, *inputs.ground_truth).psnr_db; }
    if (!x.vec().allFinite()) { throw DomainError(fmt::format("recover: iterate became non-finite at iteration {}", t)); }
    out.trace.push_back(rec);
    if (inputs.on_iteration) { inputs.on_iteration(rec); }
  }
  out.x = std::move(x);
  return out;
}

} // namespace gsr
