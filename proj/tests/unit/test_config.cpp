#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "gsr/config.hpp"
#include "gsr/errors.hpp"
#include "gsr/measurement_file.hpp"
#include "support/temp_dir.hpp"

using namespace gsr;

TEST_SUITE("config") {

TEST_CASE("parses pairs, comments and blank lines")
{
  auto const cfg = ExperimentConfig::from_string("# experiment\n\nlambda = 12.5\npenalty=scad  # kind\n"
                                                 "sweep_subrates = 0.1, 0.2 ,0.3\n");
  CHECK(cfg.get_double("lambda", 0.0) == 12.5);
  CHECK(cfg.get_string("penalty", "") == "scad");
  CHECK(cfg.get_list("sweep_subrates") == std::vector<std::string>{"0.1", "0.2", "0.3"});
  CHECK(cfg.get_int("outer_iters", 7) == 7);
  CHECK_FALSE(cfg.has("mu"));
}

TEST_CASE("dashes in keys are normalised")
{
  ExperimentConfig cfg;
  cfg.set("outer-iters", "3");
  CHECK(cfg.get_int("outer_iters", 0) == 3);
}

TEST_CASE("bad input is a config error")
{
  CHECK_THROWS_AS(ExperimentConfig::from_string("lambda"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("lamda=1"), ConfigError);
  auto const cfg = ExperimentConfig::from_string("lambda=abc\nouter_iters=2.5");
  CHECK_THROWS_AS(cfg.get_double("lambda", 0.0), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("outer_iters", 0), ConfigError);
  CHECK_THROWS_AS(cfg.require("output"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/gsr.cfg"), IoError);
}

TEST_CASE("unknown penalty lists the valid kinds")
{
  auto const cfg = ExperimentConfig::from_string("penalty=huber");
  try {
    (void)cfg.solver_config();
    FAIL("expected a ConfigError");
  } catch (ConfigError const &e) {
    CHECK(std::string(e.what()).find("lp|scad|log|mcp|etp|capped_l1|geman|laplace") != std::string::npos);
  }
}

TEST_CASE("solver config defaults and shapes")
{
  auto const def = ExperimentConfig{}.solver_config();
  CHECK(def.penalty.kind() == PenaltyKind::Logarithm);
  CHECK(def.penalty.shape() == 1.5);
  CHECK(def.weighting.scheme == WeightingMode::Scheme::Combined);
  CHECK(def.fidelity == Fidelity::L2);
  CHECK_FALSE(def.sigma_m.has_value());

  CHECK(ExperimentConfig::from_string("penalty=scad").solver_config().penalty.shape() == 3.7);
  CHECK(ExperimentConfig::from_string("penalty=lp").solver_config().penalty.shape() == 0.5);
  auto const c = ExperimentConfig::from_string("penalty=mcp\nshape=4\npen_lambda=2\nweighting=none\n"
                                               "fidelity=m_estimator\nsigma_m=3\npatch=5\ngroup_size=10")
                   .solver_config();
  CHECK(c.penalty.shape() == 4.0);
  CHECK(c.penalty.lambda() == 2.0);
  CHECK(c.weighting.scheme == WeightingMode::Scheme::Uniform);
  CHECK(c.fidelity == Fidelity::MEstimator);
  CHECK(*c.sigma_m == 3.0);
  CHECK(c.grouping.patch_side == 5);
  CHECK(c.grouping.group_size == 10);

  CHECK_THROWS_AS(ExperimentConfig::from_string("penalty=lp\nshape=2").solver_config(), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("weighting=sometimes").solver_config(), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("mu=0").solver_config(), ConfigError);
}

TEST_CASE("operator and noise specs")
{
  auto const cfg = ExperimentConfig::from_string("op=dft\nsubrate=0.2\nseed=18446744073709551615\nnoise=mixture\n"
                                                 "noise_sigma=2\nsnr_db=15");
  auto const op = cfg.operator_spec(8, 4);
  CHECK(op.kind == OperatorKind::MaskedDft);
  CHECK(op.seed == 18446744073709551615ULL);
  CHECK(op.width == 8);
  auto const noise = cfg.noise_spec();
  CHECK(noise.model == NoiseModel::GaussianMixture);
  CHECK(*noise.target_snr_db == 15.0);
  CHECK_THROWS_AS(ExperimentConfig::from_string("subrate=1.5").operator_spec(4, 4), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("op=radon").operator_spec(4, 4), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("noise=mixture\nxi=1").noise_spec(), ConfigError);
}

TEST_CASE("measurement file round trip")
{
  testing::TempDir dir;
  MeasurementFile f;
  f.op = OperatorSpec{OperatorKind::BlockGaussian, 9, 7, 0.1 + 0.2, 42, 8};
  f.m = 3;
  f.noise.model = NoiseModel::Gaussian;
  f.noise.sigma = 1.0 / 3.0;
  f.noise.target_snr_db = 20.0;
  f.realized_snr_db = 19.999999999999996;
  f.y = Eigen::Vector3d(-0.0, 1e-310, 123.456789012345678);
  write_measurement_file(dir.file("m.gsrm"), f);
  auto const g = read_measurement_file(dir.file("m.gsrm"));
  CHECK(g.op.kind == f.op.kind);
  CHECK(g.op.subrate == f.op.subrate);
  CHECK(g.op.seed == 42);
  CHECK(g.op.block_side == 8);
  CHECK(g.noise.sigma == f.noise.sigma);
  CHECK(*g.noise.target_snr_db == 20.0);
  CHECK(g.realized_snr_db == f.realized_snr_db);
  CHECK(g.y == f.y);

  f.noise.model = NoiseModel::None;
  f.noise.target_snr_db.reset();
  f.realized_snr_db = INFINITY;
  write_measurement_file(dir.file("n.gsrm"), f);
  auto const n = read_measurement_file(dir.file("n.gsrm"));
  CHECK(std::isinf(n.realized_snr_db));
  CHECK_FALSE(n.noise.target_snr_db.has_value());
}

TEST_CASE("malformed measurement files are rejected")
{
  testing::TempDir dir;
  auto write = [&](std::string const &name, std::string const &bytes) {
    std::ofstream(dir.file(name), std::ios::binary) << bytes;
    return dir.file(name);
  };
  CHECK_THROWS_AS(read_measurement_file(dir.file("missing.gsrm")), IoError);
  CHECK_THROWS_AS(read_measurement_file(write("magic", "GSRM2\nend\n")), IoError);
  CHECK_THROWS_AS(read_measurement_file(write("open", "GSRM1\nop=dense\n")), IoError);
  std::string const header = "GSRM1\nop=dense\nwidth=2\nheight=2\nsubrate=0.5\nseed=1\nblock_side=32\nm=2\n"
                             "noise=none\nnoise_sigma=0\nxi=0.1\nkappa=100\nsnr_db=none\nrealized_snr_db=inf\nend\n";
  CHECK_THROWS_AS(read_measurement_file(write("short", header + std::string(12, '\0'))), IoError);
  CHECK(read_measurement_file(write("ok", header + std::string(16, '\0'))).y.isZero());
  try {
    read_measurement_file(write("bad", "GSRM1\nop=dense\nwidth=two\nend\n"));
    FAIL("expected an IoError");
  } catch (IoError const &e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
}

} // TEST_SUITE
