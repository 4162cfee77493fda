#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gsr/config.hpp"
#include "gsr/image.hpp"
#include "gsr/measurement_file.hpp"
#include "gsr/solver.hpp"

namespace gsr {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_io = 3, exit_numerical = 4 };

// Exit code for an exception escaping a command.
int exit_code_for(std::exception const &e);

// Measures `truth` with the configured operator and noise. Deterministic in
// the config seed.
MeasurementFile simulate_measurements(ExperimentConfig const &cfg, Image const &truth);

// Runs the solver on a measurement file. Config keys that describe the
// operator (op, subrate, seed, block_side) must agree with the file when set.
RecoveryResult run_recovery(ExperimentConfig const &cfg, MeasurementFile const &file,
                            std::optional<Image> const &ground_truth);

// One z-step pass over `noisy` with the configured tau.
Image run_denoise(ExperimentConfig const &cfg, Image const &noisy);

void write_trace_csv(std::filesystem::path const &path, RecoveryResult const &result, SolverConfig const &cfg);

void cmd_measure(ExperimentConfig const &cfg, std::ostream &out);
void cmd_recover(ExperimentConfig const &cfg, std::ostream &out);
void cmd_denoise(ExperimentConfig const &cfg, std::ostream &out);
void cmd_sweep(ExperimentConfig const &cfg, std::ostream &out);
void cmd_metrics(ExperimentConfig const &cfg, std::ostream &out);

// Parses argv-style arguments (without the program name), dispatches to a
// subcommand and maps failures to exit codes.
int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace gsr
