#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string_view>

#include <Eigen/Core>

#include "gsr/image.hpp"

namespace gsr {

enum class OperatorKind {
  DenseGaussian, // one Gaussian matrix over the whole image, entries N(0, 1/M)
  BlockGaussian, // independent Gaussian projection of every block_side^2 block
  MaskedDft,     // selected coefficients of the unitary 2-D DFT
  Identity,      // H = I; trivial inverse problems and smoke tests
};

std::string_view operator_name(OperatorKind kind); // dense, block, dft, identity
std::optional<OperatorKind> parse_operator_kind(std::string_view name);

struct OperatorSpec {
  OperatorKind kind = OperatorKind::DenseGaussian;
  int width = 0;
  int height = 0;
  double subrate = 0.3;
  std::uint64_t seed = 0;
  int block_side = 32;

  // round(subrate * N), never below 1.
  int target_measurements() const;
};

// A linear measurement operator H: R^N -> R^M. Immutable after construction
// and cheap to copy (the operator data is shared).
//
// MaskedDft measurements are real: a conjugate pair {k, -k} is stored as
// sqrt(2) Re X_k, sqrt(2) Im X_k and a self-conjugate frequency as Re X_k,
// which makes the rows orthonormal. The mask always contains DC.
class MeasurementOp {
public:
  static MeasurementOp create(OperatorSpec const &spec);
  // Wraps an explicit M x (width * height) matrix (tests, custom operators).
  static MeasurementOp from_matrix(Eigen::MatrixXd const &h, int width, int height);

  OperatorKind kind() const;
  OperatorSpec const &spec() const;
  int rows() const;   // M
  int cols() const;   // N
  int width() const { return spec().width; }
  int height() const { return spec().height; }
  double sampling_rate() const { return static_cast<double>(rows()) / cols(); }

  Eigen::VectorXd forward(Eigen::VectorXd const &x) const;
  Eigen::VectorXd forward(Image const &x) const { return forward(Eigen::VectorXd(x.vec())); }
  Eigen::VectorXd adjoint(Eigen::VectorXd const &y) const;
  Image adjoint_image(Eigen::VectorXd const &y) const;

  // Materialises H column by column. Only sensible for small N.
  Eigen::MatrixXd to_dense() const;

  struct Impl;

private:
  explicit MeasurementOp(std::shared_ptr<Impl const> impl)
    : impl_{std::move(impl)}
  {}
  std::shared_ptr<Impl const> impl_;
};

// Power iteration on H^T H (Rayleigh quotient), at most 200 iterations.
double operator_norm_estimate(MeasurementOp const &op, int max_iters = 200);

enum class NoiseModel { None, Gaussian, GaussianMixture };

// GaussianMixture draws each sample from N(0, sigma^2) with probability
// 1 - xi and from N(0, kappa * sigma^2) otherwise. When target_snr_db is set
// the drawn vector is rescaled to hit that SNR exactly.
struct NoiseSpec {
  NoiseModel model = NoiseModel::None;
  double sigma = 0.0;
  double xi = 0.1;
  double kappa = 100.0;
  std::optional<double> target_snr_db;

  void validate() const;
};

std::string_view noise_name(NoiseModel model); // none, gaussian, mixture
std::optional<NoiseModel> parse_noise_model(std::string_view name);

struct NoisyMeasurements {
  Eigen::VectorXd y;
  Eigen::VectorXd noise;
  double snr_db = 0.0; // +inf when no noise was added
};

// 20 log10(||clean - mean(clean)|| / ||noise||); +inf for a zero noise vector.
double measurement_snr_db(Eigen::VectorXd const &clean, Eigen::VectorXd const &noise);

NoisyMeasurements add_noise(Eigen::VectorXd const &clean, NoiseSpec const &spec, std::mt19937_64 &rng);

} // namespace gsr
