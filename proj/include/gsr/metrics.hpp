#pragma once

#include "gsr/image.hpp"

namespace gsr {

struct QualityReport {
  double psnr_db = 0.0; // +inf for identical images
  double mse = 0.0;
};

// PSNR with the 8-bit peak: 10 log10(255^2 / mse).
QualityReport psnr(Image const &x, Image const &reference);

} // namespace gsr
