#pragma once

#include <filesystem>

#include <Eigen/Core>

#include "gsr/measurement.hpp"

namespace gsr {

// GSRM1 measurement file: a short text header of key=value lines opened by
// the magic line "GSRM1" and closed by "end", followed by M little-endian
// IEEE-754 doubles. The operator itself is not stored; it is regenerated
// from (op, width, height, subrate, seed, block_side).
struct MeasurementFile {
  OperatorSpec op;
  int m = 0;
  NoiseSpec noise;
  double realized_snr_db = 0.0;
  Eigen::VectorXd y;
};

void write_measurement_file(std::filesystem::path const &path, MeasurementFile const &file);
MeasurementFile read_measurement_file(std::filesystem::path const &path);

} // namespace gsr
