#include "gsr/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gsr/errors.hpp"
#include "gsr/metrics.hpp"

namespace gsr {

int exit_code_for(std::exception const &e)
{
  if (dynamic_cast<ConfigError const *>(&e) || dynamic_cast<ContractError const *>(&e) ||
      dynamic_cast<InsufficientCandidatesError const *>(&e)) {
    return exit_config;
  }
  if (dynamic_cast<IoError const *>(&e)) { return exit_io; }
  return exit_numerical;
}

namespace {

std::string weighting_name(WeightingMode::Scheme s)
{
  switch (s) {
  case WeightingMode::Scheme::Combined: return "combined";
  case WeightingMode::Scheme::SupergradientOnly: return "supergradient";
  case WeightingMode::Scheme::Uniform: return "none";
  }
  return "?";
}

std::string fidelity_name(Fidelity f) { return f == Fidelity::L2 ? "l2" : "m_estimator"; }

// Plain doubles round-trip exactly; PSNR uses the fixed two decimals.
std::string num(double v) { return fmt::format("{}", v); }
std::string psnr_text(double v) { return std::isfinite(v) ? fmt::format("{:.2f}", v) : num(v); }

std::string csv_field(std::string const &s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) { return s; }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') { out += '"'; }
    out += c;
  }
  return out + "\"";
}

std::ofstream open_output(std::filesystem::path const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  return out;
}

Image read_image(ExperimentConfig const &cfg, std::string const &key)
{
  return read_pgm(cfg.require(key));
}

void check_same_shape(Image const &a, Image const &b, std::string const &what)
{
  if (!a.same_shape(b)) {
    throw ConfigError(fmt::format("{} is {}x{} but the reconstruction is {}x{}", what, b.width(), b.height(),
                                  a.width(), a.height()));
  }
}

} // namespace

MeasurementFile simulate_measurements(ExperimentConfig const &cfg, Image const &truth)
{
  MeasurementFile file;
  file.op = cfg.operator_spec(truth.width(), truth.height());
  file.noise = cfg.noise_spec();
  auto const h = MeasurementOp::create(file.op);
  Eigen::VectorXd const clean = h.forward(truth.vec());
  // The noise stream is seeded apart from the operator so that changing the
  // noise never changes the operator drawn for the same seed.
  std::seed_seq seq{static_cast<std::uint32_t>(file.op.seed), static_cast<std::uint32_t>(file.op.seed >> 32),
                    0x6e6f6973U};
  std::mt19937_64 rng(seq);
  auto noisy = add_noise(clean, file.noise, rng);
  file.m = static_cast<int>(noisy.y.size());
  file.y = std::move(noisy.y);
  file.realized_snr_db = noisy.snr_db;
  return file;
}

RecoveryResult run_recovery(ExperimentConfig const &cfg, MeasurementFile const &file,
                            std::optional<Image> const &ground_truth)
{
  auto const &op = file.op;
  auto mismatch = [](std::string const &key, std::string const &cfg_value, std::string const &file_value) {
    return ConfigError(fmt::format("config sets {}={} but the measurement file has {}={}", key, cfg_value, key,
                                   file_value));
  };
  if (auto v = cfg.get_optional("op"); v && *v != operator_name(op.kind)) {
    throw mismatch("op", *v, std::string(operator_name(op.kind)));
  }
  if (cfg.has("subrate") && cfg.get_double("subrate", 0.0) != op.subrate) {
    throw mismatch("subrate", cfg.require("subrate"), num(op.subrate));
  }
  if (cfg.has("seed") && cfg.get_seed() != op.seed) {
    throw mismatch("seed", cfg.require("seed"), fmt::format("{}", op.seed));
  }
  if (cfg.has("block_side") && cfg.get_int("block_side", 0) != op.block_side) {
    throw mismatch("block_side", cfg.require("block_side"), fmt::format("{}", op.block_side));
  }

  auto const solver = cfg.solver_config();
  auto const h = MeasurementOp::create(op);
  if (h.rows() != file.m) {
    throw ConfigError(fmt::format("measurement file holds {} values but the operator has {} rows", file.m, h.rows()));
  }
  Image const shape(op.width, op.height);

  RecoverInputs inputs;
  if (ground_truth) {
    check_same_shape(shape, *ground_truth, "ground truth");
    inputs.ground_truth = ground_truth;
  }
  if (solver.init == InitMode::GivenImage) {
    auto init = read_image(cfg, "init_image");
    check_same_shape(shape, init, "initial image");
    inputs.initial = std::move(init);
  }
  return recover(file.y, h, solver, inputs);
}

Image run_denoise(ExperimentConfig const &cfg, Image const &noisy)
{
  auto const solver = cfg.solver_config();
  auto const tau_text = cfg.require("tau");
  double const tau = cfg.get_double("tau", 0.0);
  if (!(tau >= 0.0) || !std::isfinite(tau)) { throw ConfigError(fmt::format("tau must be finite and >= 0 (got {})", tau_text)); }
  return z_step(noisy, solver, tau).z;
}

void write_trace_csv(std::filesystem::path const &path, RecoveryResult const &result, SolverConfig const &cfg)
{
  bool const has_psnr = !result.trace.empty() && result.trace.front().psnr.has_value();
  std::string text = fmt::format("# gsr trace fidelity={} penalty={} weighting={} tau={}\n",
                                 fidelity_name(cfg.fidelity), penalty_name(cfg.penalty.kind()),
                                 weighting_name(cfg.weighting.scheme), num(result.tau));
  text += has_psnr ? "iter,data_fidelity,reg_surrogate,x_minus_z_norm,psnr\n"
                   : "iter,data_fidelity,reg_surrogate,x_minus_z_norm\n";
  for (auto const &t : result.trace) {
    text += fmt::format("{},{},{},{}", t.iter, num(t.data_fidelity), num(t.reg_surrogate), num(t.x_minus_z_norm));
    if (has_psnr) { text += "," + psnr_text(t.psnr.value_or(std::nan(""))); }
    text += '\n';
  }
  auto out = open_output(path);
  out << text;
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

void cmd_measure(ExperimentConfig const &cfg, std::ostream &out)
{
  auto const truth = read_image(cfg, "input");
  auto const target = cfg.get_optional("output") ? cfg.require("output") : cfg.require("measurements");
  auto const file = simulate_measurements(cfg, truth);
  write_measurement_file(target, file);
  out << fmt::format("measure: {} measurements of {} pixels, snr_db={}, wrote {}\n", file.m,
                     truth.size(), num(file.realized_snr_db), target);
}

void cmd_recover(ExperimentConfig const &cfg, std::ostream &out)
{
  auto const file = read_measurement_file(cfg.require("measurements"));
  auto const output = cfg.require("output");
  std::optional<Image> truth;
  if (cfg.has("ground_truth")) { truth = read_image(cfg, "ground_truth"); }
  auto const result = run_recovery(cfg, file, truth);
  write_pgm(output, result.x);
  if (auto trace = cfg.get_optional("trace")) { write_trace_csv(*trace, result, cfg.solver_config()); }
  out << fmt::format("recover: {} iterations, tau={}, wrote {}", result.trace.size(), num(result.tau), output);
  if (truth) { out << fmt::format(", psnr={} dB", psnr_text(psnr(quantize_8bit(result.x), *truth).psnr_db)); }
  out << '\n';
}

void cmd_denoise(ExperimentConfig const &cfg, std::ostream &out)
{
  auto const noisy = read_image(cfg, "input");
  auto const output = cfg.require("output");
  auto const result = run_denoise(cfg, noisy);
  write_pgm(output, result);
  out << fmt::format("denoise: wrote {}", output);
  if (cfg.has("ground_truth")) {
    auto const truth = read_image(cfg, "ground_truth");
    check_same_shape(result, truth, "ground truth");
    out << fmt::format(", psnr={} dB (input {} dB)", psnr_text(psnr(quantize_8bit(result), truth).psnr_db),
                       psnr_text(psnr(noisy, truth).psnr_db));
  }
  out << '\n';
}

namespace {

struct SweepCell {
  std::string subrate;
  std::string snr; // "none" keeps the configured noise
  std::string penalty;
  std::string weighting;
};

struct SweepRow {
  double psnr = std::nan("");
  double seconds = 0.0;
  std::string status = "ok";
  std::string message;
};

std::vector<std::string> list_or(ExperimentConfig const &cfg, std::string const &list_key, std::string const &key,
                                 std::string const &fallback)
{
  auto items = cfg.get_list(list_key);
  if (items.empty()) { items.push_back(cfg.get_string(key, fallback)); }
  return items;
}

ExperimentConfig cell_config(ExperimentConfig cfg, SweepCell const &cell)
{
  cfg.set("subrate", cell.subrate);
  cfg.set("penalty", cell.penalty);
  cfg.set("weighting", cell.weighting);
  if (cell.snr != "none") {
    cfg.set("snr_db", cell.snr);
    if (cfg.get_string("noise", "none") == "none") { cfg.set("noise", "gaussian"); }
  }
  return cfg;
}

} // namespace

void cmd_sweep(ExperimentConfig const &cfg, std::ostream &out)
{
  auto const truth = read_image(cfg, "input");
  auto const summary = cfg.get_optional("output") ? cfg.require("output") : cfg.require("summary");
  auto const sweep_dir = cfg.get_optional("sweep_dir");
  if (sweep_dir) { std::filesystem::create_directories(*sweep_dir); }

  std::vector<SweepCell> cells;
  for (auto const &s : list_or(cfg, "sweep_subrates", "subrate", "0.3")) {
    for (auto const &n : list_or(cfg, "sweep_snrs", "snr_db", "none")) {
      for (auto const &p : list_or(cfg, "sweep_penalties", "penalty", "log")) {
        for (auto const &w : list_or(cfg, "sweep_weightings", "weighting", "combined")) {
          cells.push_back({s, n, p, w});
        }
      }
    }
  }

  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto const start = std::chrono::steady_clock::now();
      try {
        auto const c = cell_config(cfg, cells[i]);
        auto const file = simulate_measurements(c, truth);
        auto const result = run_recovery(c, file, std::nullopt);
        auto const x = quantize_8bit(result.x);
        rows[i].psnr = psnr(x, truth).psnr_db;
        if (sweep_dir) { write_pgm(std::filesystem::path(*sweep_dir) / fmt::format("cell{:03}.pgm", i), x); }
      } catch (std::exception const &e) {
        rows[i].status = "error";
        rows[i].message = e.what();
      }
      rows[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  int const jobs = std::max(1, std::min<int>(cfg.get_int("jobs", 1), static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) { pool.emplace_back(worker); }
  worker();
  for (auto &t : pool) { t.join(); }

  std::string text = "cell,subrate,snr_db,penalty,weighting,psnr_db,wall_seconds,status,message\n";
  int failed = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto const &c = cells[i];
    auto const &r = rows[i];
    failed += r.status != "ok";
    text += fmt::format("{},{},{},{},{},{},{:.3f},{},{}\n", i, csv_field(c.subrate), csv_field(c.snr),
                        csv_field(c.penalty), csv_field(c.weighting), r.status == "ok" ? psnr_text(r.psnr) : "",
                        r.seconds, r.status, csv_field(r.message));
  }
  auto file = open_output(summary);
  file << text;
  if (!file) { throw IoError(fmt::format("{}: write failed", summary)); }
  out << fmt::format("sweep: {} cells, {} failed, wrote {}\n", cells.size(), failed, summary);
}

void cmd_metrics(ExperimentConfig const &cfg, std::ostream &out)
{
  auto const x = read_image(cfg, "input");
  auto const truth = read_image(cfg, "ground_truth");
  check_same_shape(x, truth, "ground truth");
  auto const q = psnr(x, truth);
  out << "psnr_db,mse\n" << fmt::format("{},{}\n", psnr_text(q.psnr_db), num(q.mse));
}

namespace {

// "--key value" and "--key=value" pairs left over after CLI11 parsing.
void apply_overrides(ExperimentConfig &cfg, std::vector<std::string> const &extras)
{
  for (std::size_t i = 0; i < extras.size(); ++i) {
    auto const &tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
      throw ConfigError(fmt::format("unexpected argument '{}'", tok));
    }
    auto const body = tok.substr(2);
    if (auto const eq = body.find('='); eq != std::string::npos) {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      cfg.set(body, extras[++i]);
    } else {
      throw ConfigError(fmt::format("option '{}' needs a value", tok));
    }
  }
}

} // namespace

int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Group-sparse low-rank compressed sensing reconstruction", "gsr"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, seed, ground_truth, output, trace, jobs, input, measurements;
  } flags;

  using Command = void (*)(ExperimentConfig const &, std::ostream &);
  std::vector<std::pair<CLI::App *, Command>> commands;
  auto add = [&](char const *name, char const *help, Command fn) {
    auto *sub = app.add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--config", flags.config, "key=value config file");
    sub->add_option("--seed", flags.seed, "operator and noise seed");
    sub->add_option("--ground-truth", flags.ground_truth, "reference PGM");
    sub->add_option("--output", flags.output, "output path");
    sub->add_option("--trace", flags.trace, "trace CSV path");
    sub->add_option("--jobs", flags.jobs, "concurrent sweep cells");
    sub->add_option("--input", flags.input, "input PGM");
    sub->add_option("--measurements", flags.measurements, "GSRM1 measurement file");
    sub->footer("Any other configuration key can be given as --key value.");
    commands.emplace_back(sub, fn);
  };
  add("measure", "simulate compressive measurements of an image", cmd_measure);
  add("recover", "reconstruct an image from a measurement file", cmd_recover);
  add("denoise", "one grouped low-rank denoising pass", cmd_denoise);
  add("sweep", "grid of simulate+recover runs with a summary CSV", cmd_sweep);
  add("metrics", "PSNR of an image against a reference", cmd_metrics);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (CLI::CallForHelp const &) {
    out << app.help();
    return exit_ok;
  } catch (CLI::ParseError const &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_ok;
    }
    err << "gsr: " << e.what() << '\n';
    return exit_config;
  }

  for (auto const &[sub, fn] : commands) {
    if (!sub->parsed()) { continue; }
    try {
      ExperimentConfig cfg;
      if (!flags.config.empty()) { cfg = ExperimentConfig::from_file(flags.config); }
      apply_overrides(cfg, sub->remaining());
      std::pair<char const *, std::string const *> const named[] = {
        {"seed", &flags.seed},     {"ground_truth", &flags.ground_truth}, {"output", &flags.output},
        {"trace", &flags.trace},   {"jobs", &flags.jobs},                 {"input", &flags.input},
        {"measurements", &flags.measurements}};
      for (auto const &[key, value] : named) {
        if (!value->empty()) { cfg.set(key, *value); }
      }
      fn(cfg, out);
      return exit_ok;
    } catch (std::exception const &e) {
      err << "gsr " << sub->get_name() << ": " << e.what() << '\n';
      return exit_code_for(e);
    }
  }
  return exit_config;
}

} // namespace gsr
