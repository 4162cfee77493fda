#include "gsr/metrics.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

QualityReport psnr(Image const &x, Image const &reference)
{
  if (!x.same_shape(reference)) {
    throw ContractError(fmt::format("psnr: {}x{} image compared with {}x{} reference", x.width(), x.height(),
                                    reference.width(), reference.height()));
  }
  if (x.size() == 0) { throw ContractError("psnr: empty images"); }
  double sum = 0.0;
  auto const a = x.pixels();
  auto const b = reference.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double const d = a[i] - b[i];
    sum += d * d;
  }
  QualityReport out;
  out.mse = sum / static_cast<double>(a.size());
  out.psnr_db = out.mse == 0.0 ? std::numeric_limits<double>::infinity()
                               : 10.0 * std::log10(255.0 * 255.0 / out.mse);
  return out;
}

} // namespace gsr
