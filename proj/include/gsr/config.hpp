#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsr/measurement.hpp"
#include "gsr/solver.hpp"

namespace gsr {

// Flat key=value experiment configuration. Files hold one pair per line;
// '#' starts a comment. Later settings override earlier ones, which is how
// command-line --key value pairs are layered over a config file.
class ExperimentConfig {
public:
  static ExperimentConfig from_file(std::filesystem::path const &path);
  static ExperimentConfig from_string(std::string const &text, std::string const &origin = "<string>");

  // Throws ConfigError for keys outside the documented set.
  void set(std::string key, std::string value);
  bool has(std::string const &key) const { return values_.contains(key); }

  std::string get_string(std::string const &key, std::string const &fallback) const;
  std::optional<std::string> get_optional(std::string const &key) const;
  std::string require(std::string const &key) const;
  double get_double(std::string const &key, double fallback) const;
  std::optional<double> get_optional_double(std::string const &key) const;
  int get_int(std::string const &key, int fallback) const;
  std::uint64_t get_seed() const;
  std::vector<std::string> get_list(std::string const &key) const;

  // Typed views; dimensions that come from the data (image size) are filled
  // in by the caller.
  OperatorSpec operator_spec(int width, int height) const;
  NoiseSpec noise_spec() const;
  SolverConfig solver_config() const;

  std::map<std::string, std::string> const &values() const { return values_; }

  static std::vector<std::string> const &known_keys();

private:
  std::map<std::string, std::string> values_;
};

} // namespace gsr
