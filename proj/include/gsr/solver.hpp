#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gsr/grouping.hpp"
#include "gsr/image.hpp"
#include "gsr/lowrank.hpp"
#include "gsr/measurement.hpp"
#include "gsr/penalty.hpp"

namespace gsr {

enum class Fidelity { L2, MEstimator };
enum class InitMode { Adjoint, GivenImage };

struct SolverConfig {
  double lambda = 300.0; // sized for 8-bit intensities
  double mu = 0.0025;
  GroupingConfig grouping;
  Penalty penalty{PenaltyKind::Logarithm, 1.0, 1.5};
  WeightingMode weighting;
  int outer_iters = 80;
  int gd_steps = 20;
  Fidelity fidelity = Fidelity::L2;
  // Fixed M-estimator scale. Unset: 1.4826 * MAD of the residual at Z + W,
  // re-estimated at every q update. +inf makes every q_i exactly 1.
  std::optional<double> sigma_m;
  InitMode init = InitMode::Adjoint;
  int inner_iters = 1;
  InitialWeights init_weights = InitialWeights::Observation;

  void validate() const;
};

// Regularisation strength of the per-group problems:
// lambda * (n_groups * group_size * patch_pixels) / (mu * n_pixels).
double tau_from_config(SolverConfig const &cfg, int n_groups, int n_pixels);

// Number of groups build_groups produces for an image of this size.
int group_count(int width, int height, GroupingConfig const &cfg);

struct XStepResult {
  Eigen::VectorXd x;
  // Subproblem objective at the starting point and after every step.
  std::vector<double> objective;
  double data_fit = 0.0; // 0.5 * sum q_i (y - Hx)_i^2 at the returned x
  int steps_taken = 0;
};

// Steepest descent with exact line search on
//   0.5 ||y - Hx||^2 + mu/2 ||x - z - w||^2
// starting from x0. Stops early on a zero gradient.
XStepResult x_step_standard(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                            Eigen::VectorXd const &w, double mu, int steps, Eigen::VectorXd const &x0);

// Same on the half-quadratic weighted fit 0.5 ||sqrt(Q)(y - Hx)||^2 + ...
XStepResult x_step_robust(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &z,
                          Eigen::VectorXd const &w, double mu, Eigen::VectorXd const &q, int steps,
                          Eigen::VectorXd const &x0);

// 1.4826 * median(|r - median(r)|).
double robust_scale(Eigen::VectorXd const &residual);

// q_i = exp(-(y - Hx)_i^2 / sigma_m^2), floored at 1e-300.
Eigen::VectorXd q_update(Eigen::VectorXd const &y, MeasurementOp const &h, Eigen::VectorXd const &x,
                         double sigma_m);

struct ZStepResult {
  Image z;
  // lambda * sum over groups and singular values of rho(sigma_i(Z_Gk)),
  // evaluated on the denoised groups before aggregation.
  double reg_surrogate = 0.0;
  int n_groups = 0;
};

// Groups R, denoises every group with one IRNN call and averages the
// groups back into an image.
ZStepResult z_step(Image const &r, SolverConfig const &cfg, double tau);

// W - (X - Z).
Image multiplier_update(Image const &w, Image const &x, Image const &z);

struct TraceRecord {
  int iter = 0;
  double data_fidelity = 0.0;
  double reg_surrogate = 0.0;
  double x_minus_z_norm = 0.0;
  std::optional<double> psnr;
};

struct RecoveryResult {
  Image x; // unclamped
  std::vector<TraceRecord> trace;
  double tau = 0.0;
};

struct RecoverInputs {
  std::optional<Image> initial;      // required for InitMode::GivenImage
  std::optional<Image> ground_truth; // enables the psnr trace column
  std::function<void(TraceRecord const &)> on_iteration;
};

// The ADMM outer loop: [q update] -> X step -> R = X - W -> Z step -> W update.
RecoveryResult recover(Eigen::VectorXd const &y, MeasurementOp const &h, SolverConfig const &cfg,
                       RecoverInputs const &inputs = {});

} // namespace gsr
