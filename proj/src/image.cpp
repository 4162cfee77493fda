#include "gsr/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

Image::Image(int width, int height, double fill)
  : width_{width}
  , height_{height}
{
  if (width < 0 || height < 0) {
    throw ContractError(fmt::format("negative image size {}x{}", width, height));
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<double> data)
  : width_{width}
  , height_{height}
  , data_{std::move(data)}
{
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ContractError(fmt::format("image data length {} does not match {}x{}", data_.size(),
                                    width, height));
  }
}

Image Image::from_vector(int width, int height, Eigen::VectorXd const &v)
{
  return Image(width, height, std::vector<double>(v.data(), v.data() + v.size()));
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream &in)
{
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) { return token; }
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int parse_header_int(std::istream &in, std::filesystem::path const &path, char const *what)
{
  auto const token = next_token(in);
  try {
    std::size_t used = 0;
    int const value = std::stoi(token, &used);
    if (used != token.size()) { throw std::invalid_argument(token); }
    return value;
  } catch (std::exception const &) {
    throw IoError(fmt::format("{}: malformed PGM {} '{}'", path.string(), what, token));
  }
}

} // namespace

Image read_pgm(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open for reading", path.string())); }

  if (next_token(in) != "P5") { throw IoError(fmt::format("{}: not a binary PGM (P5)", path.string())); }
  int const width = parse_header_int(in, path.string(), "width");
  int const height = parse_header_int(in, path.string(), "height");
  int const maxval = parse_header_int(in, path.string(), "maxval");
  if (width <= 0 || height <= 0) {
    throw IoError(fmt::format("{}: invalid PGM size {}x{}", path.string(), width, height));
  }
  if (maxval != 255) {
    throw IoError(fmt::format("{}: only maxval 255 is supported (got {})", path.string(), maxval));
  }
  // next_token consumed exactly one whitespace byte after maxval.

  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(fmt::format("{}: truncated pixel data", path.string()));
  }
  return Image(width, height, std::vector<double>(bytes.begin(), bytes.end()));
}

namespace {

unsigned char to_byte(double v)
{
  if (!(v > 0.0)) { return 0; } // also maps NaN to 0
  if (v >= 255.0) { return 255; }
  return static_cast<unsigned char>(std::round(v));
}

} // namespace

Image quantize_8bit(Image const &image)
{
  Image out(image.width(), image.height());
  std::ranges::transform(image.pixels(), out.pixels().begin(),
                         [](double v) { return static_cast<double>(to_byte(v)); });
  return out;
}

void write_pgm(std::filesystem::path const &path, Image const &image)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> bytes(image.size());
  std::ranges::transform(image.pixels(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

} // namespace gsr
