#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsr/grouping.hpp"
#include "gsr/penalty.hpp"
#include "gsr/svd.hpp"

namespace gsr {

// How the per-singular-value weights of one reweighting sweep are formed
// from the current spectrum s.
//   SupergradientOnly: w_i = drho(s_i)
//   Combined:          w_i = drho(s_i) / (|s_i| + epsilon)
//   Uniform:           w_i = 1 (plain nuclear norm, the convex baseline)
struct WeightingMode {
  enum class Scheme { SupergradientOnly, Combined, Uniform };

  Scheme scheme = Scheme::Combined;
  double epsilon = 2.2204e-16;
};

// Where the first sweep takes its weights from: the spectrum of the noisy
// group itself, or the all-zero iterate.
enum class InitialWeights { Observation, Zero };

struct DenoiseOptions {
  int inner_iters = 1;
  InitialWeights init = InitialWeights::Observation;
  // Stop once ||Z_new - Z||_F <= tolerance * ||Z||_F. Zero disables.
  double tolerance = 1e-6;
  bool track_objective = true;
};

struct DenoiseResult {
  PatchGroup group;                          // denoised group, same layout as the input
  Eigen::VectorXd sigma;                     // singular values of the denoised group
  std::vector<Eigen::VectorXd> weights_trace; // weights used by each sweep
  // Objective of the starting iterate followed by one entry per sweep. Empty
  // unless DenoiseOptions::track_objective is set.
  std::vector<double> objective_trace;
};

// U * diag((sigma_i - tau * w_i)_+) * V^T for the SVD of r. Weights must be
// nonnegative and nondecreasing (+inf allowed, meaning full truncation).
Eigen::MatrixXd wsvt(Eigen::MatrixXd const &r, Eigen::VectorXd const &weights, double tau);

// Same shrinkage on an already known spectrum.
Eigen::VectorXd shrink_spectrum(Eigen::VectorXd const &sigma, Eigen::VectorXd const &weights, double tau);

// Weights for one sweep; the result is validated to be nonnegative and
// nondecreasing.
Eigen::VectorXd reweight(Eigen::VectorXd const &spectrum, Penalty const &pen, WeightingMode const &mode);

// The concave spectral penalty that a sweep majorises:
//   SupergradientOnly: rho(theta)
//   Combined:          integral over [0, theta] of drho(t) / (t + epsilon)
//   Uniform:           theta
// The Combined weights are exactly the derivative of this function, which is
// what makes the reweighting a majorise-minimise scheme in every mode.
double effective_penalty(Penalty const &pen, WeightingMode const &mode, double theta);

// 0.5 * sum (zeta_i - s_i)^2 + tau * sum effective_penalty(s_i): the group
// objective for an iterate sharing the singular vectors of the observation.
double denoise_objective(Eigen::VectorXd const &zeta, Eigen::VectorXd const &s, Penalty const &pen,
                         WeightingMode const &mode, double tau);

struct RankCheck {
  int rank = 0;
  int nnz_coefficients = 0;
};

// rank counts singular values above 1e-10 * sigma_1. nnz_coefficients counts
// the nonzero coefficients of the group over its own SVD dictionary
// (atoms u_i v_i^T, coefficients <X, u_i v_i^T>), the sparse-code view of
// the same group. The two agree for any matrix.
RankCheck rank_sparsity_check(PatchGroup const &group);

// Iteratively reweighted nuclear-norm denoising of one group: each sweep
// forms weights from the current iterate's spectrum and applies one WSVT to
// the observation.
DenoiseResult irnn_denoise_group(PatchGroup const &observed, Penalty const &pen, double tau,
                                 WeightingMode const &mode, DenoiseOptions const &options = {});

} // namespace gsr
