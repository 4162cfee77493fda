#include "gsr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

std::vector<std::string> const &ExperimentConfig::known_keys()
{
  static std::vector<std::string> const keys{
    // files
    "input", "measurements", "output", "trace", "ground_truth", "init_image", "summary", "sweep_dir",
    // measurement
    "op", "subrate", "seed", "block_side", "noise", "noise_sigma", "xi", "kappa", "snr_db",
    // solver
    "lambda", "mu", "penalty", "pen_lambda", "shape", "weighting", "epsilon", "outer_iters", "gd_steps",
    "fidelity", "sigma_m", "init", "patch", "stride", "window", "group_size", "inner_iters", "init_weights",
    // denoise
    "tau",
    // sweep
    "sweep_subrates", "sweep_snrs", "sweep_penalties", "sweep_weightings", "jobs"};
  return keys;
}

namespace {

std::string trim(std::string const &s)
{
  auto const first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) { return {}; }
  auto const last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

} // namespace

ExperimentConfig ExperimentConfig::from_string(std::string const &text, std::string const &origin)
{
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto const hash = line.find('#'); hash != std::string::npos) { line.erase(hash); }
    line = trim(line);
    if (line.empty()) { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value, got '{}'", origin, lineno, line));
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("{}: cannot open config file", path.string())); }
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

void ExperimentConfig::set(std::string key, std::string value)
{
  std::replace(key.begin(), key.end(), '-', '_');
  auto const &keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  }
  values_[std::move(key)] = std::move(value);
}

std::optional<std::string> ExperimentConfig::get_optional(std::string const &key) const
{
  auto const it = values_.find(key);
  if (it == values_.end()) { return std::nullopt; }
  return it->second;
}

std::string ExperimentConfig::get_string(std::string const &key, std::string const &fallback) const
{
  return get_optional(key).value_or(fallback);
}

std::string ExperimentConfig::require(std::string const &key) const
{
  auto v = get_optional(key);
  if (!v || v->empty()) { throw ConfigError(fmt::format("missing required setting '{}'", key)); }
  return *v;
}

namespace {

double parse_double(std::string const &key, std::string const &text)
{
  double value = 0.0;
  auto const *end = text.data() + text.size();
  auto const [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("setting '{}': '{}' is not a number", key, text));
  }
  return value;
}

template <class Int>
Int parse_int(std::string const &key, std::string const &text)
{
  Int value{};
  auto const *end = text.data() + text.size();
  auto const [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("setting '{}': '{}' is not an integer", key, text));
  }
  return value;
}

} // namespace

std::optional<double> ExperimentConfig::get_optional_double(std::string const &key) const
{
  auto v = get_optional(key);
  if (!v) { return std::nullopt; }
  return parse_double(key, *v);
}

double ExperimentConfig::get_double(std::string const &key, double fallback) const
{
  return get_optional_double(key).value_or(fallback);
}

int ExperimentConfig::get_int(std::string const &key, int fallback) const
{
  auto v = get_optional(key);
  return v ? parse_int<int>(key, *v) : fallback;
}

std::uint64_t ExperimentConfig::get_seed() const
{
  auto v = get_optional("seed");
  return v ? parse_int<std::uint64_t>("seed", *v) : 0;
}

std::vector<std::string> ExperimentConfig::get_list(std::string const &key) const
{
  std::vector<std::string> out;
  auto v = get_optional(key);
  if (!v) { return out; }
  std::stringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

OperatorSpec ExperimentConfig::operator_spec(int width, int height) const
{
  OperatorSpec spec;
  auto const name = get_string("op", "dense");
  auto const kind = parse_operator_kind(name);
  if (!kind) { throw ConfigError(fmt::format("unknown operator '{}' (valid: dense|block|dft|identity)", name)); }
  spec.kind = *kind;
  spec.width = width;
  spec.height = height;
  spec.subrate = get_double("subrate", spec.subrate);
  spec.seed = get_seed();
  spec.block_side = get_int("block_side", spec.block_side);
  if (!(spec.subrate > 0.0 && spec.subrate <= 1.0)) {
    throw ConfigError(fmt::format("subrate must lie in (0, 1] (got {})", spec.subrate));
  }
  return spec;
}

NoiseSpec ExperimentConfig::noise_spec() const
{
  NoiseSpec spec;
  auto const name = get_string("noise", "none");
  auto const model = parse_noise_model(name);
  if (!model) { throw ConfigError(fmt::format("unknown noise model '{}' (valid: none|gaussian|mixture)", name)); }
  spec.model = *model;
  spec.sigma = get_double("noise_sigma", spec.sigma);
  spec.xi = get_double("xi", spec.xi);
  spec.kappa = get_double("kappa", spec.kappa);
  spec.target_snr_db = get_optional_double("snr_db");
  try {
    spec.validate();
  } catch (ContractError const &e) {
    throw ConfigError(e.what());
  }
  return spec;
}

SolverConfig ExperimentConfig::solver_config() const
{
  SolverConfig cfg;
  cfg.lambda = get_double("lambda", cfg.lambda);
  cfg.mu = get_double("mu", cfg.mu);
  cfg.outer_iters = get_int("outer_iters", cfg.outer_iters);
  cfg.gd_steps = get_int("gd_steps", cfg.gd_steps);
  cfg.inner_iters = get_int("inner_iters", cfg.inner_iters);
  cfg.grouping.patch_side = get_int("patch", cfg.grouping.patch_side);
  cfg.grouping.stride = get_int("stride", cfg.grouping.stride);
  cfg.grouping.window_side = get_int("window", cfg.grouping.window_side);
  cfg.grouping.group_size = get_int("group_size", cfg.grouping.group_size);

  auto const pen_name = get_string("penalty", "log");
  auto const kind = parse_penalty_kind(pen_name);
  if (!kind) {
    throw ConfigError(fmt::format("unknown penalty kind '{}' (valid: {})", pen_name, penalty_kind_list()));
  }
  double const default_shape = *kind == PenaltyKind::Lp ? 0.5 : (*kind == PenaltyKind::Scad ? 3.7 : 1.5);

  auto const weighting = get_string("weighting", "combined");
  if (weighting == "combined") {
    cfg.weighting.scheme = WeightingMode::Scheme::Combined;
  } else if (weighting == "supergradient") {
    cfg.weighting.scheme = WeightingMode::Scheme::SupergradientOnly;
  } else if (weighting == "none") {
    cfg.weighting.scheme = WeightingMode::Scheme::Uniform;
  } else {
    throw ConfigError(fmt::format("unknown weighting '{}' (valid: combined|supergradient|none)", weighting));
  }
  cfg.weighting.epsilon = get_double("epsilon", cfg.weighting.epsilon);

  auto const fidelity = get_string("fidelity", "l2");
  if (fidelity == "l2") {
    cfg.fidelity = Fidelity::L2;
  } else if (fidelity == "m_estimator") {
    cfg.fidelity = Fidelity::MEstimator;
  } else {
    throw ConfigError(fmt::format("unknown fidelity '{}' (valid: l2|m_estimator)", fidelity));
  }
  cfg.sigma_m = get_optional_double("sigma_m");

  auto const init = get_string("init", "adjoint");
  if (init == "adjoint") {
    cfg.init = InitMode::Adjoint;
  } else if (init == "given") {
    cfg.init = InitMode::GivenImage;
  } else {
    throw ConfigError(fmt::format("unknown init '{}' (valid: adjoint|given)", init));
  }

  auto const init_weights = get_string("init_weights", "observation");
  if (init_weights == "observation") {
    cfg.init_weights = InitialWeights::Observation;
  } else if (init_weights == "zero") {
    cfg.init_weights = InitialWeights::Zero;
  } else {
    throw ConfigError(fmt::format("unknown init_weights '{}' (valid: observation|zero)", init_weights));
  }

  try {
    cfg.penalty = Penalty(*kind, get_double("pen_lambda", 1.0), get_double("shape", default_shape));
    cfg.validate();
  } catch (ContractError const &e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

} // namespace gsr
