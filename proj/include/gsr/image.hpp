#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gsr {

struct Position {
  int row = 0;
  int col = 0;

  friend bool operator==(Position const &, Position const &) = default;
};

// Single-channel image stored row-major. Values are unconstrained reals; the
// natural range of 8-bit sources is [0, 255].
class Image {
public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double &at(int row, int col) { return data_[index(row, col)]; }
  double at(int row, int col) const { return data_[index(row, col)]; }

  std::span<double> pixels() { return data_; }
  std::span<double const> pixels() const { return data_; }

  // Flat views used by the linear algebra in the measurement and solver code.
  Eigen::Map<Eigen::VectorXd> vec() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<Eigen::VectorXd const> vec() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  static Image from_vector(int width, int height, Eigen::VectorXd const &v);

  bool same_shape(Image const &other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(Image const &, Image const &) = default;

private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Binary PGM (P5, maxval 255).
Image read_pgm(std::filesystem::path const &path);

// Clamps to [0, 255] and rounds half away from zero.
void write_pgm(std::filesystem::path const &path, Image const &image);

// The 8-bit quantisation write_pgm applies, without touching the disk.
Image quantize_8bit(Image const &image);

} // namespace gsr
