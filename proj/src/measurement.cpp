#include "gsr/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

std::string_view operator_name(OperatorKind kind)
{
  switch (kind) {
  case OperatorKind::DenseGaussian: return "dense";
  case OperatorKind::BlockGaussian: return "block";
  case OperatorKind::MaskedDft: return "dft";
  case OperatorKind::Identity: return "identity";
  }
  return "?";
}

std::optional<OperatorKind> parse_operator_kind(std::string_view name)
{
  for (auto kind : {OperatorKind::DenseGaussian, OperatorKind::BlockGaussian, OperatorKind::MaskedDft,
                    OperatorKind::Identity}) {
    if (operator_name(kind) == name) { return kind; }
  }
  return std::nullopt;
}

int OperatorSpec::target_measurements() const
{
  double const n = static_cast<double>(width) * static_cast<double>(height);
  return std::max(1, static_cast<int>(std::lround(subrate * n)));
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Complex = std::complex<double>;

namespace {

struct Dense {
  RowMatrix h;
};

struct Block {
  int r0, c0, rows, cols; // pixel extent of the block
  int offset;             // first measurement index
  RowMatrix h;            // m_b x (rows * cols), block pixels row-major
};

struct Blocks {
  std::vector<Block> blocks;
};

struct Frequency {
  int ku, kv;
  int kv_slot;       // column of the partial row-DFT table
  bool self_conjugate;
};

struct Dft {
  std::vector<Frequency> freqs;
  std::vector<int> kv_values;
  std::vector<Complex> twiddle_h; // e^{-2 pi i j / H}
  std::vector<Complex> twiddle_w; // e^{-2 pi i j / W}
};

struct Identity {};

void fill_gaussian(RowMatrix &m, double stddev, std::mt19937_64 &rng)
{
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) { m(i, j) = normal(rng); }
  }
}

Dense make_dense(OperatorSpec const &spec)
{
  int const m = spec.target_measurements();
  Dense d;
  d.h.resize(m, static_cast<Eigen::Index>(spec.width) * spec.height);
  std::mt19937_64 rng(spec.seed);
  fill_gaussian(d.h, 1.0 / std::sqrt(static_cast<double>(m)), rng);
  return d;
}

Blocks make_blocks(OperatorSpec const &spec)
{
  if (spec.block_side < 1) { throw ContractError("block_side must be >= 1"); }
  Blocks out;
  for (int r0 = 0; r0 < spec.height; r0 += spec.block_side) {
    for (int c0 = 0; c0 < spec.width; c0 += spec.block_side) {
      Block b;
      b.r0 = r0;
      b.c0 = c0;
      b.rows = std::min(spec.block_side, spec.height - r0);
      b.cols = std::min(spec.block_side, spec.width - c0);
      b.offset = 0;
      out.blocks.push_back(std::move(b));
    }
  }

  // Largest-remainder split of the measurement budget, proportional to block
  // area, so the total is exactly target_measurements().
  int const total = spec.target_measurements();
  double const n = static_cast<double>(spec.width) * spec.height;
  std::vector<int> share(out.blocks.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < out.blocks.size(); ++i) {
    double const exact = total * (out.blocks[i].rows * out.blocks[i].cols) / n;
    share[i] = static_cast<int>(std::floor(exact));
    assigned += share[i];
    remainders.emplace_back(exact - share[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](auto const &a, auto const &b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) { ++share[remainders[static_cast<std::size_t>(k)].second]; }

  std::mt19937_64 rng(spec.seed);
  int offset = 0;
  for (std::size_t i = 0; i < out.blocks.size(); ++i) {
    auto &b = out.blocks[i];
    b.offset = offset;
    b.h.resize(share[i], b.rows * b.cols);
    if (share[i] > 0) { fill_gaussian(b.h, 1.0 / std::sqrt(static_cast<double>(share[i])), rng); }
    offset += share[i];
  }
  return out;
}

Dft make_dft(OperatorSpec const &spec)
{
  int const h = spec.height;
  int const w = spec.width;
  struct Unit {
    int ku, kv;
    bool self_conjugate;
  };
  std::vector<Unit> units;
  for (int ku = 0; ku < h; ++ku) {
    for (int kv = 0; kv < w; ++kv) {
      if (ku == 0 && kv == 0) { continue; }
      int const pu = (h - ku) % h;
      int const pv = (w - kv) % w;
      if (pu == ku && pv == kv) {
        units.push_back({ku, kv, true});
      } else if (ku * w + kv < pu * w + pv) {
        units.push_back({ku, kv, false});
      }
    }
  }
  std::mt19937_64 rng(spec.seed);
  std::shuffle(units.begin(), units.end(), rng);

  int const target = spec.target_measurements();
  std::vector<Unit> chosen{{0, 0, true}};
  int count = 1;
  for (auto const &u : units) {
    int const size = u.self_conjugate ? 1 : 2;
    if (count + size <= target) {
      chosen.push_back(u);
      count += size;
    }
    if (count == target) { break; }
  }
  std::sort(chosen.begin(), chosen.end(),
            [](Unit const &a, Unit const &b) { return a.ku != b.ku ? a.ku < b.ku : a.kv < b.kv; });

  Dft d;
  std::vector<int> slot(static_cast<std::size_t>(w), -1);
  for (auto const &u : chosen) {
    auto &s = slot[static_cast<std::size_t>(u.kv)];
    if (s < 0) {
      s = static_cast<int>(d.kv_values.size());
      d.kv_values.push_back(u.kv);
    }
    d.freqs.push_back({u.ku, u.kv, s, u.self_conjugate});
  }
  auto const twiddles = [](int n) {
    std::vector<Complex> t(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) { t[static_cast<std::size_t>(j)] = std::polar(1.0, -2.0 * std::numbers::pi * j / n); }
    return t;
  };
  d.twiddle_h = twiddles(h);
  d.twiddle_w = twiddles(w);
  return d;
}

int measurement_count(Dft const &d)
{
  int m = 0;
  for (auto const &f : d.freqs) { m += f.self_conjugate ? 1 : 2; }
  return m;
}

} // namespace

struct MeasurementOp::Impl {
  OperatorSpec spec;
  int m = 0;
  std::variant<Dense, Blocks, Dft, Identity> data;
};

MeasurementOp MeasurementOp::create(OperatorSpec const &spec)
{
  if (spec.width < 1 || spec.height < 1) {
    throw ContractError(fmt::format("operator image size {}x{} is empty", spec.width, spec.height));
  }
  if (!(spec.subrate > 0.0 && spec.subrate <= 1.0)) {
    throw ContractError(fmt::format("subrate must lie in (0, 1] (got {})", spec.subrate));
  }
  auto impl = std::make_shared<Impl>();
  impl->spec = spec;
  switch (spec.kind) {
  case OperatorKind::DenseGaussian:
    impl->data = make_dense(spec);
    impl->m = static_cast<int>(std::get<Dense>(impl->data).h.rows());
    break;
  case OperatorKind::BlockGaussian:
    impl->data = make_blocks(spec);
    impl->m = spec.target_measurements();
    break;
  case OperatorKind::MaskedDft:
    impl->data = make_dft(spec);
    impl->m = measurement_count(std::get<Dft>(impl->data));
    break;
  case OperatorKind::Identity:
    impl->data = Identity{};
    impl->m = spec.width * spec.height;
    impl->spec.subrate = 1.0;
    break;
  }
  return MeasurementOp(std::move(impl));
}

MeasurementOp MeasurementOp::from_matrix(Eigen::MatrixXd const &h, int width, int height)
{
  if (h.cols() != static_cast<Eigen::Index>(width) * height) {
    throw ContractError(fmt::format("matrix has {} columns, image has {} pixels", h.cols(), width * height));
  }
  if (h.rows() < 1) { throw ContractError("measurement matrix has no rows"); }
  auto impl = std::make_shared<Impl>();
  impl->spec = OperatorSpec{OperatorKind::DenseGaussian, width, height,
                            static_cast<double>(h.rows()) / static_cast<double>(h.cols()), 0, 32};
  impl->m = static_cast<int>(h.rows());
  impl->data = Dense{h};
  return MeasurementOp(std::move(impl));
}

OperatorKind MeasurementOp::kind() const { return impl_->spec.kind; }
OperatorSpec const &MeasurementOp::spec() const { return impl_->spec; }
int MeasurementOp::rows() const { return impl_->m; }
int MeasurementOp::cols() const { return impl_->spec.width * impl_->spec.height; }

namespace {

struct Forward {
  Eigen::VectorXd const &x;
  OperatorSpec const &spec;
  int m;

  Eigen::VectorXd operator()(Dense const &d) const { return d.h * x; }

  Eigen::VectorXd operator()(Blocks const &bs) const
  {
    Eigen::VectorXd y(m);
    for (auto const &b : bs.blocks) {
      if (b.h.rows() == 0) { continue; }
      Eigen::VectorXd patch(b.rows * b.cols);
      for (int r = 0; r < b.rows; ++r) {
        for (int c = 0; c < b.cols; ++c) { patch[r * b.cols + c] = x[(b.r0 + r) * spec.width + b.c0 + c]; }
      }
      y.segment(b.offset, b.h.rows()) = b.h * patch;
    }
    return y;
  }

  Eigen::VectorXd operator()(Dft const &d) const
  {
    int const h = spec.height;
    int const w = spec.width;
    auto const nk = d.kv_values.size();
    // Partial DFT along each row for the needed column frequencies.
    std::vector<Complex> t(static_cast<std::size_t>(h) * nk);
    for (int r = 0; r < h; ++r) {
      for (std::size_t j = 0; j < nk; ++j) {
        int const kv = d.kv_values[j];
        Complex acc{};
        for (int c = 0; c < w; ++c) { acc += x[r * w + c] * d.twiddle_w[static_cast<std::size_t>((kv * c) % w)]; }
        t[static_cast<std::size_t>(r) * nk + j] = acc;
      }
    }
    double const scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    Eigen::VectorXd y(m);
    int k = 0;
    for (auto const &f : d.freqs) {
      Complex acc{};
      for (int r = 0; r < h; ++r) {
        acc += d.twiddle_h[static_cast<std::size_t>((f.ku * r) % h)] *
               t[static_cast<std::size_t>(r) * nk + static_cast<std::size_t>(f.kv_slot)];
      }
      acc *= scale;
      if (f.self_conjugate) {
        y[k++] = acc.real();
      } else {
        y[k++] = std::numbers::sqrt2 * acc.real();
        y[k++] = std::numbers::sqrt2 * acc.imag();
      }
    }
    return y;
  }

  Eigen::VectorXd operator()(Identity const &) const { return x; }
};

struct Adjoint {
  Eigen::VectorXd const &y;
  OperatorSpec const &spec;

  Eigen::VectorXd operator()(Dense const &d) const { return d.h.transpose() * y; }

  Eigen::VectorXd operator()(Blocks const &bs) const
  {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.width) * spec.height);
    for (auto const &b : bs.blocks) {
      if (b.h.rows() == 0) { continue; }
      Eigen::VectorXd const patch = b.h.transpose() * y.segment(b.offset, b.h.rows());
      for (int r = 0; r < b.rows; ++r) {
        for (int c = 0; c < b.cols; ++c) { x[(b.r0 + r) * spec.width + b.c0 + c] = patch[r * b.cols + c]; }
      }
    }
    return x;
  }

  Eigen::VectorXd operator()(Dft const &d) const
  {
    int const h = spec.height;
    int const w = spec.width;
    auto const nk = d.kv_values.size();
    double const scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    // x[r, c] = Re sum_k a_k e^{-2 pi i (ku r / H + kv c / W)} with a_k the
    // conjugated, scaled measurement of frequency k.
    std::vector<Complex> s(static_cast<std::size_t>(h) * nk);
    int k = 0;
    for (auto const &f : d.freqs) {
      Complex a;
      if (f.self_conjugate) {
        a = Complex(y[k++] * scale, 0.0);
      } else {
        double const re = y[k++];
        double const im = y[k++];
        a = std::numbers::sqrt2 * scale * Complex(re, -im);
      }
      for (int r = 0; r < h; ++r) {
        s[static_cast<std::size_t>(r) * nk + static_cast<std::size_t>(f.kv_slot)] +=
          a * d.twiddle_h[static_cast<std::size_t>((f.ku * r) % h)];
      }
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(h) * w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nk; ++j) {
          acc += (s[static_cast<std::size_t>(r) * nk + j] *
                  d.twiddle_w[static_cast<std::size_t>((d.kv_values[j] * c) % w)])
                   .real();
        }
        x[r * w + c] = acc;
      }
    }
    return x;
  }

  Eigen::VectorXd operator()(Identity const &) const { return y; }
};

} // namespace

Eigen::VectorXd MeasurementOp::forward(Eigen::VectorXd const &x) const
{
  if (x.size() != cols()) {
    throw ContractError(fmt::format("forward: input has {} entries, operator expects {}", x.size(), cols()));
  }
  return std::visit(Forward{x, impl_->spec, impl_->m}, impl_->data);
}

Eigen::VectorXd MeasurementOp::adjoint(Eigen::VectorXd const &y) const
{
  if (y.size() != rows()) {
    throw ContractError(fmt::format("adjoint: input has {} entries, operator expects {}", y.size(), rows()));
  }
  return std::visit(Adjoint{y, impl_->spec}, impl_->data);
}

Image MeasurementOp::adjoint_image(Eigen::VectorXd const &y) const
{
  return Image::from_vector(width(), height(), adjoint(y));
}

Eigen::MatrixXd MeasurementOp::to_dense() const
{
  Eigen::MatrixXd out(rows(), cols());
  for (int j = 0; j < cols(); ++j) { out.col(j) = forward(Eigen::VectorXd::Unit(cols(), j)); }
  return out;
}

double operator_norm_estimate(MeasurementOp const &op, int max_iters)
{
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(op.cols());
  for (auto &v : x) { v = normal(rng); }
  x.normalize();

  double estimate = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd const hx = op.forward(x);
    double const rayleigh = hx.squaredNorm();
    Eigen::VectorXd next = op.adjoint(hx);
    double const norm = next.norm();
    if (norm == 0.0) { return 0.0; }
    x = next / norm;
    if (it > 0 && std::abs(rayleigh - estimate) <= 1e-12 * rayleigh) {
      estimate = rayleigh;
      break;
    }
    estimate = rayleigh;
  }
  return std::sqrt(estimate);
}

} // namespace gsr
