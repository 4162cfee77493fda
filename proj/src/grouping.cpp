#include "gsr/grouping.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "gsr/errors.hpp"

namespace gsr {

void GroupingConfig::validate(int width, int height) const
{
  if (patch_side < 1) { throw ContractError(fmt::format("patch_side must be >= 1 (got {})", patch_side)); }
  if (stride < 1) { throw ContractError(fmt::format("stride must be >= 1 (got {})", stride)); }
  if (window_side < patch_side) {
    throw ContractError(
      fmt::format("window_side {} is smaller than patch_side {}", window_side, patch_side));
  }
  if (group_size < 1) { throw ContractError(fmt::format("group_size must be >= 1 (got {})", group_size)); }
  if (width < patch_side || height < patch_side) {
    throw ContractError(
      fmt::format("image {}x{} is smaller than a {}x{} patch", width, height, patch_side, patch_side));
  }
}

namespace {

void check_patch_bounds(Image const &image, Position pos, int patch_side)
{
  if (patch_side < 1 || pos.row < 0 || pos.col < 0 || pos.row + patch_side > image.height() ||
      pos.col + patch_side > image.width()) {
    throw BoundsError(fmt::format("patch of side {} at ({}, {}) does not fit a {}x{} image", patch_side,
                                  pos.row, pos.col, image.width(), image.height()));
  }
}

// Inclusive range of candidate anchors along one axis.
struct AnchorRange {
  int lo;
  int hi;
  int count() const { return hi - lo + 1; }
};

AnchorRange window_range(int anchor, int extent, GroupingConfig const &cfg)
{
  int const offset = (cfg.window_side - cfg.patch_side) / 2;
  int const span = cfg.window_side - cfg.patch_side;
  int const lo = std::max(0, anchor - offset);
  int const hi = std::min(extent - cfg.patch_side, anchor - offset + span);
  return {lo, hi};
}

void fill_column(Image const &image, Position pos, int patch_side, Eigen::Ref<Eigen::VectorXd> out)
{
  for (int dc = 0; dc < patch_side; ++dc) {
    for (int dr = 0; dr < patch_side; ++dr) {
      out[dc * patch_side + dr] = image.at(pos.row + dr, pos.col + dc);
    }
  }
}

void check_candidates(Position ref, int n_candidates, GroupingConfig const &cfg)
{
  if (n_candidates < cfg.group_size) {
    throw InsufficientCandidatesError(
      fmt::format("search window around ({}, {}) holds {} candidates, group size is {}", ref.row,
                  ref.col, n_candidates, cfg.group_size));
  }
}

} // namespace

Eigen::VectorXd extract_patch(Image const &image, Position pos, int patch_side)
{
  check_patch_bounds(image, pos, patch_side);
  Eigen::VectorXd v(patch_side * patch_side);
  fill_column(image, pos, patch_side, v);
  return v;
}

PatchGroup match_group(Image const &image, Position ref, GroupingConfig const &cfg,
                       std::vector<double> &distances)
{
  cfg.validate(image.width(), image.height());
  check_patch_bounds(image, ref, cfg.patch_side);

  auto const rows = window_range(ref.row, image.height(), cfg);
  auto const cols = window_range(ref.col, image.width(), cfg);
  int const n_candidates = rows.count() * cols.count();
  check_candidates(ref, n_candidates, cfg);

  int const ps = cfg.patch_side;
  std::vector<double> dist(static_cast<std::size_t>(n_candidates));
  for (int r = rows.lo, k = 0; r <= rows.hi; ++r) {
    for (int c = cols.lo; c <= cols.hi; ++c, ++k) {
      double d = 0.0;
      for (int dr = 0; dr < ps; ++dr) {
        for (int dc = 0; dc < ps; ++dc) {
          double const diff = image.at(r + dr, c + dc) - image.at(ref.row + dr, ref.col + dc);
          d += diff * diff;
        }
      }
      dist[static_cast<std::size_t>(k)] = d;
    }
  }

  // The reference always occupies column 0; the other group_size - 1
  // columns are the closest remaining candidates. Candidates are enumerated
  // in raster order, so comparing (distance, index) gives the raster
  // tie-break.
  int const ref_k = (ref.row - rows.lo) * cols.count() + (ref.col - cols.lo);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n_candidates));
  order.push_back(ref_k);
  for (int k = 0; k < n_candidates; ++k) {
    if (k != ref_k) { order.push_back(k); }
  }
  auto const closer = [&dist](int a, int b) {
    auto const da = dist[static_cast<std::size_t>(a)];
    auto const db = dist[static_cast<std::size_t>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin() + 1, order.begin() + cfg.group_size, order.end(), closer);

  PatchGroup group;
  group.patch_side = ps;
  group.ref_index = 0;
  group.matrix.resize(cfg.patch_pixels(), cfg.group_size);
  group.positions.reserve(static_cast<std::size_t>(cfg.group_size));
  distances.clear();
  for (int j = 0; j < cfg.group_size; ++j) {
    int const k = order[static_cast<std::size_t>(j)];
    Position const pos{rows.lo + k / cols.count(), cols.lo + k % cols.count()};
    group.positions.push_back(pos);
    fill_column(image, pos, ps, group.matrix.col(j));
    distances.push_back(dist[static_cast<std::size_t>(k)]);
  }
  return group;
}

PatchGroup match_group(Image const &image, Position ref, GroupingConfig const &cfg)
{
  std::vector<double> distances;
  return match_group(image, ref, cfg, distances);
}

std::vector<int> reference_anchors(int extent, int patch_side, int stride)
{
  int const last = extent - patch_side;
  std::vector<int> anchors;
  for (int a = 0; a <= last; a += stride) { anchors.push_back(a); }
  if (anchors.back() != last) { anchors.push_back(last); }
  return anchors;
}

std::vector<PatchGroup> build_groups(Image const &image, GroupingConfig const &cfg)
{
  cfg.validate(image.width(), image.height());
  auto const row_anchors = reference_anchors(image.height(), cfg.patch_side, cfg.stride);
  auto const col_anchors = reference_anchors(image.width(), cfg.patch_side, cfg.stride);

  std::vector<Position> refs;
  refs.reserve(row_anchors.size() * col_anchors.size());
  for (int r : row_anchors) {
    for (int c : col_anchors) { refs.push_back({r, c}); }
  }

  std::vector<PatchGroup> groups(refs.size());
  int const n = static_cast<int>(refs.size());
  // Every failure mode of match_group is checked here, so nothing throws
  // inside the parallel region.
  for (auto const &ref : refs) {
    auto const rows = window_range(ref.row, image.height(), cfg);
    auto const cols = window_range(ref.col, image.width(), cfg);
    check_candidates(ref, rows.count() * cols.count(), cfg);
  }
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    groups[static_cast<std::size_t>(k)] = match_group(image, refs[static_cast<std::size_t>(k)], cfg);
  }
  return groups;
}

std::vector<PatchGroup> regroup(Image const &image, std::vector<PatchGroup> const &layout)
{
  std::vector<PatchGroup> out;
  out.reserve(layout.size());
  for (auto const &g : layout) {
    PatchGroup copy;
    copy.positions = g.positions;
    copy.ref_index = g.ref_index;
    copy.patch_side = g.patch_side;
    copy.matrix.resize(g.patch_side * g.patch_side, static_cast<Eigen::Index>(g.positions.size()));
    for (std::size_t j = 0; j < g.positions.size(); ++j) {
      check_patch_bounds(image, g.positions[j], g.patch_side);
      fill_column(image, g.positions[j], g.patch_side, copy.matrix.col(static_cast<Eigen::Index>(j)));
    }
    out.push_back(std::move(copy));
  }
  return out;
}

namespace {

// Running per-pixel mean: mean += (v - mean) / count. Identical
// contributions leave the mean bit-exact, so aggregating the groups of an
// image reproduces it exactly.
void accumulate(std::vector<PatchGroup> const &groups, Image &mean, Image &count)
{
  for (auto const &g : groups) {
    int const ps = g.patch_side;
    if (g.matrix.rows() != ps * ps || g.matrix.cols() != static_cast<Eigen::Index>(g.positions.size())) {
      throw ContractError("patch group matrix does not match its positions");
    }
    for (std::size_t j = 0; j < g.positions.size(); ++j) {
      auto const pos = g.positions[j];
      check_patch_bounds(mean, pos, ps);
      auto const col = g.matrix.col(static_cast<Eigen::Index>(j));
      for (int dc = 0; dc < ps; ++dc) {
        for (int dr = 0; dr < ps; ++dr) {
          double &m = mean.at(pos.row + dr, pos.col + dc);
          double &n = count.at(pos.row + dr, pos.col + dc);
          n += 1.0;
          m += (col[dc * ps + dr] - m) / n;
        }
      }
    }
  }
}

} // namespace

Image coverage_counts(std::vector<PatchGroup> const &groups, int width, int height)
{
  Image mean(width, height);
  Image count(width, height);
  accumulate(groups, mean, count);
  return count;
}

Image aggregate_groups(std::vector<PatchGroup> const &groups, int width, int height)
{
  Image mean(width, height);
  Image count(width, height);
  // Sequential accumulation in group order keeps the result bit-reproducible.
  accumulate(groups, mean, count);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (count.at(r, c) == 0.0) {
        throw ContractError(fmt::format("pixel ({}, {}) is not covered by any group", r, c));
      }
    }
  }
  return mean;
}

} // namespace gsr
