#include <cmath>

#include <fmt/format.h>

#include "gsr/errors.hpp"
#include "gsr/measurement.hpp"

namespace gsr {

std::string_view noise_name(NoiseModel model)
{
  switch (model) {
  case NoiseModel::None: return "none";
  case NoiseModel::Gaussian: return "gaussian";
  case NoiseModel::GaussianMixture: return "mixture";
  }
  return "?";
}

std::optional<NoiseModel> parse_noise_model(std::string_view name)
{
  for (auto m : {NoiseModel::None, NoiseModel::Gaussian, NoiseModel::GaussianMixture}) {
    if (noise_name(m) == name) { return m; }
  }
  return std::nullopt;
}

void NoiseSpec::validate() const
{
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) { throw ContractError(fmt::format("noise sigma must be >= 0 (got {})", sigma)); }
  if (model == NoiseModel::GaussianMixture) {
    if (!(xi >= 0.0 && xi < 1.0)) { throw ContractError(fmt::format("mixture xi must lie in [0, 1) (got {})", xi)); }
    if (!(kappa > 1.0)) { throw ContractError(fmt::format("mixture kappa must exceed 1 (got {})", kappa)); }
  }
  if (target_snr_db && !std::isfinite(*target_snr_db)) { throw ContractError("target SNR must be finite"); }
}

double measurement_snr_db(Eigen::VectorXd const &clean, Eigen::VectorXd const &noise)
{
  double const noise_norm = noise.norm();
  if (noise_norm == 0.0) { return std::numeric_limits<double>::infinity(); }
  double const signal = (clean.array() - clean.mean()).matrix().norm();
  return 20.0 * std::log10(signal / noise_norm);
}

NoisyMeasurements add_noise(Eigen::VectorXd const &clean, NoiseSpec const &spec, std::mt19937_64 &rng)
{
  spec.validate();
  NoisyMeasurements out;
  out.noise = Eigen::VectorXd::Zero(clean.size());
  if (spec.model != NoiseModel::None) {
    // With a target SNR the draw is rescaled afterwards, so a zero sigma
    // still needs a nonzero draw.
    double const sigma = (spec.target_snr_db && spec.sigma == 0.0) ? 1.0 : spec.sigma;
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    double const outlier_scale = std::sqrt(spec.kappa);
    for (auto &n : out.noise) {
      double scale = sigma;
      if (spec.model == NoiseModel::GaussianMixture && uniform(rng) < spec.xi) { scale *= outlier_scale; }
      n = scale * normal(rng);
    }
    if (spec.target_snr_db) {
      double const signal = (clean.array() - clean.mean()).matrix().norm();
      double const norm = out.noise.norm();
      if (norm > 0.0) { out.noise *= signal / (norm * std::pow(10.0, *spec.target_snr_db / 20.0)); }
    }
  }
  out.y = clean + out.noise;
  out.snr_db = measurement_snr_db(clean, out.noise);
  return out;
}

} // namespace gsr
