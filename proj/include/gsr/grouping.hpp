#pragma once

#include <vector>

#include <Eigen/Core>

#include "gsr/image.hpp"

namespace gsr {

struct GroupingConfig {
  int patch_side = 6;
  int stride = 4;       // spacing of the reference-patch lattice
  int window_side = 20; // search window, in pixels, centred on the reference patch
  int group_size = 60;

  int patch_pixels() const { return patch_side * patch_side; }

  // Throws ContractError if the fields are inconsistent or the image is
  // smaller than one patch.
  void validate(int width, int height) const;
};

// Similar patches stacked as the columns of a patch_pixels x group_size
// matrix. The reference patch sits in column ref_index (always 0 for groups
// produced by match_group).
struct PatchGroup {
  Eigen::MatrixXd matrix;
  std::vector<Position> positions;
  int ref_index = 0;
  int patch_side = 0;
};

// Patch pixels are vectorised column-major: element (dr, dc) of the patch
// lands at index dc * patch_side + dr.
Eigen::VectorXd extract_patch(Image const &image, Position pos, int patch_side);

// Block matching over the (border-clipped) search window. Column 0 is the
// reference itself; the remaining group_size - 1 columns are the other
// candidates closest to it in squared Euclidean distance, nearest first, with
// ties going to the candidate that comes first in raster order.
PatchGroup match_group(Image const &image, Position ref, GroupingConfig const &cfg);

// Also returns the squared distances of the chosen columns, in column order.
PatchGroup match_group(Image const &image, Position ref, GroupingConfig const &cfg,
                       std::vector<double> &distances);

// Reference anchors along one axis: 0, stride, 2*stride, ... plus the last
// valid anchor (extent - patch_side) so the far border is covered.
std::vector<int> reference_anchors(int extent, int patch_side, int stride);

std::vector<PatchGroup> build_groups(Image const &image, GroupingConfig const &cfg);

// Re-extracts every group's patches from `image` at the stored positions,
// keeping the grouping fixed.
std::vector<PatchGroup> regroup(Image const &image, std::vector<PatchGroup> const &layout);

// Per-pixel average of all patch contributions. Throws ContractError when a
// pixel receives no contribution.
Image aggregate_groups(std::vector<PatchGroup> const &groups, int width, int height);

// Number of patch contributions landing on each pixel.
Image coverage_counts(std::vector<PatchGroup> const &groups, int width, int height);

} // namespace gsr
