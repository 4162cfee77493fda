#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>

#include "gsr/errors.hpp"
#include "gsr/metrics.hpp"
#include "gsr/solver.hpp"
#include "support/benchmark.hpp"

using namespace gsr;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64 &rng, double scale = 1.0)
{
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd v(n);
  for (auto &x : v) { x = d(rng); }
  return v;
}

Image noisy_copy(Image const &img, double sigma, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  Image out = img;
  for (auto &v : out.pixels()) { v += d(rng); }
  return out;
}

// Grouping sized for 32x32 test images.
SolverConfig small_config()
{
  SolverConfig cfg;
  cfg.grouping = GroupingConfig{6, 4, 20, 40};
  cfg.outer_iters = 30;
  return cfg;
}

} // namespace

TEST_SUITE("solver") {

TEST_CASE("tau scaling")
{
  SolverConfig cfg;
  cfg.lambda = 10.0;
  cfg.mu = 1.0;
  cfg.grouping = GroupingConfig{6, 4, 20, 60};
  // 10 * 64 * 60 * 36 / 1024.
  CHECK(tau_from_config(cfg, 64, 1024) == doctest::Approx(1350.0).epsilon(1e-14));

  cfg.lambda = 0.5;
  cfg.mu = 0.5;
  cfg.grouping = GroupingConfig{2, 2, 4, 4};
  CHECK(tau_from_config(cfg, 1, 16) == doctest::Approx(1.0).epsilon(1e-14));

  double const before = tau_from_config(cfg, 7, 300);
  cfg.mu = 1.0;
  CHECK(tau_from_config(cfg, 7, 300) == doctest::Approx(before / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(tau_from_config(cfg, 0, 300), ContractError);
}

TEST_CASE("identity operator X step reaches its minimiser in one step")
{
  std::mt19937_64 rng(1);
  auto const h = MeasurementOp::create({OperatorKind::Identity, 4, 5, 1.0, 0, 32});
  auto const y = random_vector(20, rng);
  auto const z = random_vector(20, rng);
  auto const w = random_vector(20, rng);
  double const mu = 0.25;
  auto const r = x_step_standard(y, h, z, w, mu, 1, z);
  Eigen::VectorXd const expected = (y + mu * (z + w)) / (1.0 + mu);
  CHECK((r.x - expected).norm() <= 1e-12 * expected.norm());

  // With mu = 0 the minimiser is y itself.
  auto const r0 = x_step_standard(y, h, z, w, 0.0, 1, Eigen::VectorXd::Zero(20));
  CHECK((r0.x - y).norm() <= 1e-12 * y.norm());
}

TEST_CASE("X step converges to the normal-equation solution")
{
  std::mt19937_64 rng(2);
  Eigen::MatrixXd hm(20, 36);
  for (Eigen::Index i = 0; i < hm.size(); ++i) { hm.data()[i] = random_vector(1, rng)[0] / std::sqrt(20.0); }
  auto const h = MeasurementOp::from_matrix(hm, 6, 6);
  auto const y = random_vector(20, rng);
  auto const z = random_vector(36, rng);
  auto const w = random_vector(36, rng);
  double const mu = 0.5;
  Eigen::VectorXd const q = random_vector(20, rng).array().abs() + 0.2;

  Eigen::MatrixXd const a = hm.transpose() * hm + mu * Eigen::MatrixXd::Identity(36, 36);
  Eigen::VectorXd const expected = a.ldlt().solve(hm.transpose() * y + mu * (z + w));
  auto const r = x_step_standard(y, h, z, w, mu, 200, Eigen::VectorXd::Zero(36));
  CHECK((r.x - expected).norm() <= 1e-6 * expected.norm());

  Eigen::MatrixXd const aq = hm.transpose() * q.asDiagonal() * hm + mu * Eigen::MatrixXd::Identity(36, 36);
  Eigen::VectorXd const expected_q = aq.ldlt().solve(hm.transpose() * q.asDiagonal() * y + mu * (z + w));
  auto const rq = x_step_robust(y, h, z, w, mu, q, 200, Eigen::VectorXd::Zero(36));
  CHECK((rq.x - expected_q).norm() <= 1e-6 * expected_q.norm());

  for (std::size_t k = 1; k < rq.objective.size(); ++k) {
    CHECK(rq.objective[k] <= rq.objective[k - 1] * (1.0 + 1e-12));
  }
  CHECK(r.data_fit == doctest::Approx(0.5 * (y - hm * r.x).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("robust step with unit weights is the standard step")
{
  std::mt19937_64 rng(3);
  auto const h = MeasurementOp::create({OperatorKind::DenseGaussian, 8, 8, 0.4, 3, 32});
  auto const y = random_vector(h.rows(), rng);
  auto const z = random_vector(64, rng);
  auto const w = random_vector(64, rng);
  auto const a = x_step_standard(y, h, z, w, 0.1, 7, z + w);
  auto const b = x_step_robust(y, h, z, w, 0.1, Eigen::VectorXd::Ones(h.rows()), 7, z + w);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
}

TEST_CASE("X step argument checks")
{
  auto const h = MeasurementOp::create({OperatorKind::Identity, 2, 2, 1.0, 0, 32});
  Eigen::VectorXd const v = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(x_step_standard(Eigen::VectorXd::Ones(3), h, v, v, 1.0, 1, v), ContractError);
  CHECK_THROWS_AS(x_step_standard(v, h, v, v, 1.0, 0, v), ContractError);
  CHECK_THROWS_AS(x_step_robust(v, h, v, v, 1.0, -v, 1, v), ContractError);
}

TEST_CASE("half-quadratic weights")
{
  auto const h = MeasurementOp::from_matrix(Eigen::MatrixXd::Identity(2, 2), 2, 1);
  Eigen::VectorXd const y = (Eigen::VectorXd(2) << std::sqrt(std::log(4.0)), 5.0).finished();
  Eigen::VectorXd const x = (Eigen::VectorXd(2) << 0.0, 5.0).finished();
  auto const q = q_update(y, h, x, 1.0);
  CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(q[1] == 1.0);
  // Huge residuals floor at 1e-300 instead of reaching zero.
  auto const tiny = q_update(Eigen::VectorXd::Constant(2, 1e6), h, Eigen::VectorXd::Zero(2), 1.0);
  CHECK(tiny[0] == 1e-300);
  auto const flat = q_update(y, h, x, std::numeric_limits<double>::infinity());
  CHECK(flat == Eigen::VectorXd::Ones(2));
  CHECK_THROWS_AS(q_update(y, h, x, 0.0), ContractError);
}

TEST_CASE("robust scale")
{
  Eigen::VectorXd const r = (Eigen::VectorXd(5) << 1.0, 2.0, 3.0, 4.0, 100.0).finished();
  // median 3, absolute deviations {2, 1, 0, 1, 97}, median 1.
  CHECK(robust_scale(r) == doctest::Approx(1.4826).epsilon(1e-14));
  Eigen::VectorXd const even = (Eigen::VectorXd(4) << 0.0, 1.0, 3.0, 10.0).finished();
  // median 2, deviations {2, 1, 1, 8}, median 1.5.
  CHECK(robust_scale(even) == doctest::Approx(1.4826 * 1.5).epsilon(1e-14));
}

TEST_CASE("z step limits")
{
  auto const img = noisy_copy(testing::benchmark_image(32), 5.0, 4);
  auto const cfg = small_config();
  CHECK(z_step(img, cfg, 0.0).z == img);
  auto const zero = z_step(img, cfg, 1e30);
  CHECK(zero.z.vec().isZero());
  CHECK(zero.reg_surrogate == 0.0);
  CHECK(zero.n_groups == group_count(32, 32, cfg.grouping));
}

TEST_CASE("z step removes noise from a self-similar image")
{
  auto const clean = testing::benchmark_image(32);
  auto const noisy = noisy_copy(clean, 10.0, 5);
  auto const cfg = small_config();
  auto const z = z_step(noisy, cfg, 3e6).z;
  CHECK(psnr(z, clean).psnr_db > psnr(noisy, clean).psnr_db + 2.0);
}

TEST_CASE("multiplier update")
{
  Image const w(2, 1, {1.0, -4.0});
  Image const x(2, 1, {3.0, 2.0});
  Image const z(2, 1, {2.0, 0.5});
  CHECK(multiplier_update(w, x, z) == Image(2, 1, {0.0, -5.5}));
  CHECK_THROWS_AS(multiplier_update(w, x, Image(1, 1)), ContractError);
}

TEST_CASE("recovery through the identity operator returns the image")
{
  auto const truth = testing::benchmark_image(32);
  auto const h = MeasurementOp::create({OperatorKind::Identity, 32, 32, 1.0, 0, 32});
  auto cfg = small_config();
  cfg.lambda = 1e-8;
  cfg.outer_iters = 5;
  RecoverInputs in;
  in.ground_truth = truth;
  auto const r = recover(h.forward(truth), h, cfg, in);
  CHECK(r.trace.size() == 5);
  CHECK(psnr(r.x, truth).psnr_db >= 40.0);
  CHECK(*r.trace.back().psnr == psnr(r.x, truth).psnr_db);
}

TEST_CASE("compressive recovery beats the adjoint")
{
  auto const truth = testing::benchmark_image(32);
  auto const h = MeasurementOp::create({OperatorKind::DenseGaussian, 32, 32, 0.3, 7, 32});
  auto const y = h.forward(truth);
  auto const cfg = small_config();
  int calls = 0;
  RecoverInputs in;
  in.on_iteration = [&](TraceRecord const &) { ++calls; };
  auto const r = recover(y, h, cfg, in);
  CHECK(calls == cfg.outer_iters);
  double const adjoint_psnr = psnr(h.adjoint_image(y), truth).psnr_db;
  CHECK(psnr(r.x, truth).psnr_db >= adjoint_psnr + 3.0);
}

TEST_CASE("recovery is equivariant to intensity scaling")
{
  // Combined weights over capped_l1 with a cap above every singular value
  // make the shrinkage tau * lambda / sigma, so scaling the data by s and
  // lambda by s^2 scales every iterate by s.
  auto const truth = testing::benchmark_image(32);
  auto const h = MeasurementOp::create({OperatorKind::DenseGaussian, 32, 32, 0.3, 2, 32});
  auto cfg = small_config();
  cfg.outer_iters = 6;
  cfg.penalty = Penalty(PenaltyKind::CappedL1, 1.0, 1e12);
  cfg.weighting = WeightingMode{WeightingMode::Scheme::Combined, 1e-300};
  auto const base = recover(h.forward(truth), h, cfg);

  double const s = 2.0;
  Image scaled = truth;
  scaled.vec() *= s;
  cfg.lambda *= s * s;
  auto const big = recover(h.forward(scaled), h, cfg);
  CHECK((big.x.vec() - s * base.x.vec()).norm() <= 1e-8 * big.x.vec().norm());
}

TEST_CASE("recover input checks")
{
  auto const h = MeasurementOp::create({OperatorKind::DenseGaussian, 32, 32, 0.3, 1, 32});
  auto cfg = small_config();
  cfg.outer_iters = 1;
  CHECK_THROWS_AS(recover(Eigen::VectorXd::Zero(5), h, cfg), ContractError);
  cfg.init = InitMode::GivenImage;
  CHECK_THROWS_AS(recover(Eigen::VectorXd::Zero(h.rows()), h, cfg), ContractError);
  cfg.init = InitMode::Adjoint;
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(recover(Eigen::VectorXd::Zero(h.rows()), h, cfg), ContractError);
}

TEST_CASE("given initial image is used")
{
  auto const truth = testing::benchmark_image(32);
  auto const h = MeasurementOp::create({OperatorKind::DenseGaussian, 32, 32, 0.3, 1, 32});
  auto cfg = small_config();
  cfg.outer_iters = 2;
  cfg.init = InitMode::GivenImage;
  RecoverInputs from_truth;
  from_truth.initial = truth;
  RecoverInputs from_zero;
  from_zero.initial = Image(32, 32, 0.0);
  auto const y = h.forward(truth);
  CHECK(psnr(recover(y, h, cfg, from_truth).x, truth).psnr_db >
        psnr(recover(y, h, cfg, from_zero).x, truth).psnr_db + 5.0);
}

} // TEST_SUITE
