#include <doctest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "gsr/errors.hpp"
#include "gsr/grouping.hpp"

using namespace gsr;

namespace {

Image random_image(int w, int h, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  Image img(w, h);
  for (auto &v : img.pixels()) { v = u(rng); }
  return img;
}

// Exhaustive oracle: every anchor in the clipped window, sorted by
// (reference first, distance, raster order).
std::vector<Position> brute_force_group(Image const &img, Position ref, GroupingConfig const &cfg)
{
  int const o = (cfg.window_side - cfg.patch_side) / 2;
  int const span = cfg.window_side - cfg.patch_side;
  std::vector<std::tuple<int, double, int, int>> all;
  for (int r = 0; r + cfg.patch_side <= img.height(); ++r) {
    for (int c = 0; c + cfg.patch_side <= img.width(); ++c) {
      if (r < ref.row - o || r > ref.row - o + span || c < ref.col - o || c > ref.col - o + span) { continue; }
      double d = (extract_patch(img, {r, c}, cfg.patch_side) - extract_patch(img, ref, cfg.patch_side)).squaredNorm();
      bool const is_ref = r == ref.row && c == ref.col;
      all.emplace_back(is_ref ? 0 : 1, d, r, c);
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<Position> out;
  for (int j = 0; j < cfg.group_size; ++j) { out.push_back({std::get<2>(all[j]), std::get<3>(all[j])}); }
  return out;
}

} // namespace

TEST_SUITE("grouping") {

TEST_CASE("extract_patch examples")
{
  Image constant(2, 2, 7.0);
  CHECK(extract_patch(constant, {0, 0}, 2) == Eigen::Vector4d(7, 7, 7, 7));

  Image img(3, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) { img.at(r, c) = 3 * r + c; }
  }
  // Column-major inside the patch: (1,1), (2,1), (1,2), (2,2).
  CHECK(extract_patch(img, {1, 1}, 2) == Eigen::Vector4d(4, 7, 5, 8));
  CHECK_THROWS_AS(extract_patch(img, {2, 2}, 2), BoundsError);
  CHECK_THROWS_AS(extract_patch(img, {-1, 0}, 2), BoundsError);
}

TEST_CASE("constant image groups take raster-first candidates")
{
  Image img(10, 10, 3.0);
  GroupingConfig cfg{2, 2, 6, 5};
  auto const g = match_group(img, {0, 0}, cfg);
  // Window anchors run over rows/cols 0..2 when clipped at the corner.
  std::vector<Position> const expected{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}};
  CHECK(g.positions == expected);
  CHECK(g.ref_index == 0);
}

TEST_CASE("reference patch is always column 0 at distance 0")
{
  auto const img = random_image(16, 16, 3);
  GroupingConfig cfg{3, 2, 9, 12};
  std::vector<double> d;
  auto const g = match_group(img, {6, 5}, cfg, d);
  CHECK(g.positions[0] == Position{6, 5});
  CHECK(d[0] == 0.0);
  CHECK(g.matrix.col(0) == extract_patch(img, {6, 5}, 3));
  CHECK(std::is_sorted(d.begin(), d.end()));
  for (std::size_t j = 0; j < g.positions.size(); ++j) {
    CHECK(g.matrix.col(static_cast<Eigen::Index>(j)) == extract_patch(img, g.positions[j], 3));
  }
}

TEST_CASE("two identical textured blocks match the exhaustive scan")
{
  auto img = random_image(12, 12, 11);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) { img.at(r + 7, c + 6) = img.at(r + 1, c + 1); }
  }
  GroupingConfig cfg{4, 2, 16, 10};
  for (Position ref : {Position{1, 1}, Position{7, 6}, Position{4, 4}, Position{0, 8}}) {
    auto const g = match_group(img, ref, cfg);
    CHECK(g.positions == brute_force_group(img, ref, cfg));
  }
  // The twin block is the nearest non-reference candidate.
  auto const g = match_group(img, {1, 1}, cfg);
  CHECK(g.positions[1] == Position{7, 6});
}

TEST_CASE("too few candidates is reported")
{
  Image img(6, 6, 1.0);
  GroupingConfig cfg{4, 2, 6, 10}; // at most 3x3 anchors
  CHECK_THROWS_AS(match_group(img, {0, 0}, cfg), InsufficientCandidatesError);
  CHECK_THROWS_AS(build_groups(img, cfg), InsufficientCandidatesError);
}

TEST_CASE("reference lattice with edge snap")
{
  CHECK(reference_anchors(32, 6, 4) == std::vector<int>{0, 4, 8, 12, 16, 20, 24, 26});
  CHECK(reference_anchors(30, 6, 4) == std::vector<int>{0, 4, 8, 12, 16, 20, 24});
  CHECK(reference_anchors(10, 6, 50) == std::vector<int>{0, 4});
  CHECK(reference_anchors(6, 6, 50) == std::vector<int>{0});

  auto const img = random_image(32, 32, 5);
  CHECK(build_groups(img, GroupingConfig{}).size() == 64);
}

TEST_CASE("aggregation averages overlapping contributions")
{
  PatchGroup a;
  a.patch_side = 2;
  a.positions = {{0, 0}, {0, 1}};
  a.matrix.resize(4, 2);
  a.matrix.col(0).setConstant(2.0);
  a.matrix.col(1).setConstant(5.0);
  auto const out = aggregate_groups({a}, 3, 2);
  CHECK(out.at(0, 0) == 2.0);
  CHECK(out.at(1, 0) == 2.0);
  CHECK(out.at(0, 1) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(out.at(1, 1) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(out.at(0, 2) == 5.0);

  PatchGroup disjoint;
  disjoint.patch_side = 1;
  disjoint.positions = {{0, 0}, {0, 1}};
  disjoint.matrix = Eigen::RowVector2d(4.0, 9.0);
  CHECK(aggregate_groups({disjoint}, 2, 1) == Image(2, 1, {4.0, 9.0}));
  CHECK_THROWS_AS(aggregate_groups({disjoint}, 3, 1), ContractError);
}

TEST_CASE("round trip reproduces the image for several configurations")
{
  std::vector<GroupingConfig> const configs{{6, 4, 20, 60}, {3, 2, 7, 9}, {4, 4, 12, 16}, {2, 1, 4, 4}, {5, 5, 9, 9}};
  std::uint64_t seed = 1;
  for (auto const &cfg : configs) {
    auto const img = random_image(23 + static_cast<int>(seed), 19 + 2 * static_cast<int>(seed), seed);
    ++seed;
    auto const groups = build_groups(img, cfg);
    CHECK(aggregate_groups(groups, img.width(), img.height()) == img);
    auto const counts = coverage_counts(groups, img.width(), img.height());
    CHECK(*std::min_element(counts.pixels().begin(), counts.pixels().end()) >= 1.0);
  }
}

TEST_CASE("aggregate is the least-squares fit of the group contents")
{
  auto const img = random_image(14, 14, 8);
  GroupingConfig cfg{3, 2, 7, 8};
  auto groups = build_groups(img, cfg);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 10.0);
  for (auto &g : groups) {
    for (Eigen::Index i = 0; i < g.matrix.size(); ++i) { g.matrix.data()[i] += n(rng); }
  }
  auto const z = aggregate_groups(groups, 14, 14);
  auto const cost = [&](Image const &candidate) {
    double s = 0.0;
    auto const fitted = regroup(candidate, groups);
    for (std::size_t k = 0; k < groups.size(); ++k) { s += (fitted[k].matrix - groups[k].matrix).squaredNorm(); }
    return s;
  };
  double const base = cost(z);
  for (int k = 0; k < 20; ++k) {
    Image p = z;
    p.at(k % 14, (5 * k) % 14) += (k % 2 ? 0.5 : -0.5);
    CHECK(cost(p) > base);
  }
}

TEST_CASE("grouping is deterministic")
{
  auto const img = random_image(30, 30, 9);
  auto const a = build_groups(img, GroupingConfig{});
  auto const b = build_groups(img, GroupingConfig{});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].positions == b[k].positions);
    CHECK(a[k].matrix == b[k].matrix);
  }
}

} // TEST_SUITE
