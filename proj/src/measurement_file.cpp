#include "gsr/measurement_file.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

namespace {

constexpr char const *magic = "GSRM1";

} // namespace

void write_measurement_file(std::filesystem::path const &path, MeasurementFile const &file)
{
  if (file.y.size() != file.m) { throw ContractError("measurement file: m does not match the data length"); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }

  // fmt's "{}" is the shortest round-trip form and ignores the locale.
  std::string header = fmt::format("{}\n", magic);
  header += fmt::format("op={}\n", operator_name(file.op.kind));
  header += fmt::format("width={}\nheight={}\n", file.op.width, file.op.height);
  header += fmt::format("subrate={}\nseed={}\nblock_side={}\n", file.op.subrate, file.op.seed, file.op.block_side);
  header += fmt::format("m={}\n", file.m);
  header += fmt::format("noise={}\nnoise_sigma={}\nxi={}\nkappa={}\n", noise_name(file.noise.model),
                        file.noise.sigma, file.noise.xi, file.noise.kappa);
  header += file.noise.target_snr_db ? fmt::format("snr_db={}\n", *file.noise.target_snr_db) : "snr_db=none\n";
  header += fmt::format("realized_snr_db={}\n", file.realized_snr_db);
  header += "end\n";
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (Eigen::Index i = 0; i < file.y.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(file.y[i]);
    char bytes[8];
    for (char &b : bytes) {
      b = static_cast<char>(bits & 0xffU);
      bits >>= 8;
    }
    out.write(bytes, 8);
  }
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

namespace {

template <class T>
T parse_field(std::map<std::string, std::string> const &fields, std::string const &key,
              std::filesystem::path const &path)
{
  auto const it = fields.find(key);
  if (it == fields.end()) { throw IoError(fmt::format("{}: header lacks '{}'", path.string(), key)); }
  T value{};
  auto const &text = it->second;
  auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw IoError(fmt::format("{}: malformed header field {}={}", path.string(), key, text));
  }
  return value;
}

} // namespace

MeasurementFile read_measurement_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open measurement file", path.string())); }

  std::string line;
  if (!std::getline(in, line) || line != magic) {
    throw IoError(fmt::format("{}: not a GSRM1 measurement file", path.string()));
  }
  std::map<std::string, std::string> fields;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      closed = true;
      break;
    }
    auto const eq = line.find('=');
    if (eq == std::string::npos) { throw IoError(fmt::format("{}: malformed header line '{}'", path.string(), line)); }
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!closed) { throw IoError(fmt::format("{}: header is not terminated", path.string())); }

  MeasurementFile file;
  auto const op_name = fields["op"];
  auto const kind = parse_operator_kind(op_name);
  if (!kind) { throw IoError(fmt::format("{}: unknown operator '{}'", path.string(), op_name)); }
  file.op.kind = *kind;
  file.op.width = parse_field<int>(fields, "width", path);
  file.op.height = parse_field<int>(fields, "height", path);
  file.op.subrate = parse_field<double>(fields, "subrate", path);
  file.op.seed = parse_field<std::uint64_t>(fields, "seed", path);
  file.op.block_side = parse_field<int>(fields, "block_side", path);
  file.m = parse_field<int>(fields, "m", path);

  auto const noise = parse_noise_model(fields["noise"]);
  if (!noise) { throw IoError(fmt::format("{}: unknown noise model '{}'", path.string(), fields["noise"])); }
  file.noise.model = *noise;
  file.noise.sigma = parse_field<double>(fields, "noise_sigma", path);
  file.noise.xi = parse_field<double>(fields, "xi", path);
  file.noise.kappa = parse_field<double>(fields, "kappa", path);
  if (fields["snr_db"] != "none") { file.noise.target_snr_db = parse_field<double>(fields, "snr_db", path); }
  file.realized_snr_db = parse_field<double>(fields, "realized_snr_db", path);

  if (file.m < 1) { throw IoError(fmt::format("{}: invalid measurement count {}", path.string(), file.m)); }
  file.y.resize(file.m);
  for (int i = 0; i < file.m; ++i) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char *>(bytes), 8);
    if (in.gcount() != 8) { throw IoError(fmt::format("{}: truncated measurement data", path.string())); }
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) { bits = (bits << 8) | bytes[b]; }
    file.y[i] = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(fmt::format("{}: trailing bytes after {} measurements", path.string(), file.m));
  }
  return file;
}

} // namespace gsr
