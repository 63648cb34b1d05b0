#include <gtest/gtest.h>

#include <cmath>

#include "prk/errors.hpp"
#include "prk/losses.hpp"
#include "prk/metrics.hpp"
#include "prk/scenegen.hpp"

using namespace prk;

namespace {

// Pixels whose depth differs from some 4-neighbour by more than 5%.
Mask depth_jumps(const Field& d) {
  Mask m(d.rows(), d.cols());
  auto jump = [](double a, double b) { return std::abs(a - b) > 0.05 * std::min(a, b); };
  for (int y = 0; y < d.rows(); ++y)
    for (int x = 0; x < d.cols(); ++x) {
      const double v = d(y, x);
      m(y, x) = (y > 0 && jump(v, d(y - 1, x))) || (y + 1 < d.rows() && jump(v, d(y + 1, x))) ||
                (x > 0 && jump(v, d(y, x - 1))) || (x + 1 < d.cols() && jump(v, d(y, x + 1)));
    }
  return m;
}

}  // namespace

TEST(GenerateScene, SameSeedIsBitIdentical) {
  const SceneConfig cfg;
  const Scene a = generate_scene(42, cfg), b = generate_scene(42, cfg);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.depth.depth, b.depth.depth);
  EXPECT_EQ(a.seg, b.seg);
  const Scene c = generate_scene(43, cfg);
  EXPECT_FALSE(a.depth.depth == c.depth.depth);
}

TEST(GenerateScene, SingleObjectHasNoDiscontinuities) {
  SceneConfig cfg;
  cfg.n_objects = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    EXPECT_EQ(count_set(depth_jumps(s.depth.depth)), 0u);
    EXPECT_EQ(count_set(label_boundary(s.seg)), 0u);
  }
}

TEST(GenerateScene, ContractsHold) {
  const SceneConfig cfg;
  const Scene s = generate_scene(7, cfg);
  ASSERT_EQ(s.image.shape(), (Shape{3, cfg.height, cfg.width}));
  EXPECT_TRUE(s.depth.dense());
  for (double d : s.depth.depth.values()) {
    EXPECT_GE(d, cfg.d_min);
    EXPECT_LE(d, cfg.d_max);
  }
  for (double v : s.image.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(std::round(v * 255.0) / 255.0, v);
  }
  for (auto l : s.seg.values()) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, cfg.n_objects);
  }
}

TEST(GenerateScene, RejectsDegenerateConfig) {
  SceneConfig cfg;
  cfg.d_min = 5.0;
  cfg.d_max = 5.0;
  EXPECT_THROW(generate_scene(1, cfg), ShapeError);
  cfg = SceneConfig{};
  cfg.height = 16;
  EXPECT_THROW(generate_scene(1, cfg), ShapeError);
  cfg = SceneConfig{};
  cfg.n_objects = 0;
  EXPECT_THROW(generate_scene(1, cfg), ShapeError);
}

TEST(GenerateScene, DepthJumpsCoincideWithLabelBoundaries) {
  SceneConfig cfg;
  std::size_t jumps = 0, boundary = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.n_objects = 6 + static_cast<int>(seed % 7);
    const Scene s = generate_scene(1000 + seed, cfg);
    const Mask j = depth_jumps(s.depth.depth), b = label_boundary(s.seg);
    EXPECT_EQ(j, b) << "seed " << seed;
    jumps += count_set(j);
    boundary += count_set(b);
    total += j.size();
  }
  EXPECT_EQ(jumps, boundary);
  EXPECT_GT(boundary, total / 100);
}

TEST(GenerateScene, SobelDepthEdgesStayNearLabelBoundaries) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = generate_scene(seed, SceneConfig{});
    const Mask e = depth_edges(s.depth).mask;
    const Mask allowed = dilate_square(label_boundary(s.seg), 1);
    EXPECT_EQ(mask_and(e, mask_not(allowed)), Mask(e.rows(), e.cols())) << "seed " << seed;
  }
}

TEST(DegradeToReal, ZeroBandOrDropIsNoOp) {
  const Scene s = generate_scene(3, SceneConfig{});
  for (auto [band, drop] : {std::pair{0, 0.7}, std::pair{3, 0.0}}) {
    DegradeConfig cfg;
    cfg.band = band;
    cfg.drop_rate = drop;
    cfg.warp_a = 1.5;
    cfg.warp_b = 0.5;
    const DegradedScene d = degrade_to_real(s, cfg);
    EXPECT_TRUE(d.sparse_depth.dense());
    for (std::size_t i = 0; i < s.depth.depth.size(); ++i)
      EXPECT_EQ(d.sparse_depth.depth[i], 1.5 * s.depth.depth[i] + 0.5);
  }
}

TEST(DegradeToReal, FullDropInvalidatesTheWholeBand) {
  const Scene s = generate_scene(4, SceneConfig{});
  DegradeConfig cfg;
  cfg.band = 3;
  cfg.drop_rate = 1.0;
  const DegradedScene d = degrade_to_real(s, cfg);
  const Mask invalid = mask_not(d.sparse_depth.valid);
  EXPECT_EQ(invalid, dilate_square(label_boundary(s.seg), 2));
  EXPECT_EQ(invalid, boundary_band(s.seg, 3));
}

TEST(DegradeToReal, HalfDropCountsHalfTheBand) {
  const Scene s = generate_scene(5, SceneConfig{});
  DegradeConfig cfg;
  cfg.band = 2;
  cfg.drop_rate = 0.5;
  cfg.seed = 11;
  const DegradedScene d = degrade_to_real(s, cfg);
  const double band = static_cast<double>(count_set(boundary_band(s.seg, 2)));
  const double invalid = static_cast<double>(d.sparse_depth.valid.size() - d.sparse_depth.valid_count());
  EXPECT_NEAR(invalid, 0.5 * band, 0.02 * 0.5 * band);
}

TEST(DegradeToReal, HolesStayInsideTheBand) {
  for (int band : {1, 2, 3, 5}) {
    const Scene s = generate_scene(static_cast<std::uint64_t>(band), SceneConfig{});
    DegradeConfig cfg;
    cfg.band = band;
    cfg.drop_rate = 0.8;
    const DegradedScene d = degrade_to_real(s, cfg);
    const Mask outside = mask_and(mask_not(d.sparse_depth.valid), mask_not(boundary_band(s.seg, band)));
    EXPECT_EQ(count_set(outside), 0u);
  }
}

TEST(DegradeToReal, WarpIsExactAndRecoverable) {
  const Scene s = generate_scene(6, SceneConfig{});
  DegradeConfig cfg;
  cfg.warp_a = 1.6;
  cfg.warp_b = 0.75;
  const DegradedScene d = degrade_to_real(s, cfg);
  for (std::size_t i = 0; i < s.depth.depth.size(); ++i)
    if (d.sparse_depth.valid[i]) {
      EXPECT_EQ(d.sparse_depth.depth[i], d.warp.apply(s.depth.depth[i]));
    }
  const SsiFit fit = ssi_align(s.depth.depth, d.sparse_depth, d.sparse_depth.valid);
  EXPECT_NEAR(fit.s, 1.6, 1e-9);
  EXPECT_NEAR(fit.t, 0.75, 1e-9);
}

TEST(DegradeToReal, RejectsBadConfig) {
  const Scene s = generate_scene(1, SceneConfig{});
  DegradeConfig cfg;
  cfg.warp_a = 0.0;
  EXPECT_THROW(degrade_to_real(s, cfg), ShapeError);
  cfg = DegradeConfig{};
  cfg.drop_rate = 1.5;
  EXPECT_THROW(degrade_to_real(s, cfg), ShapeError);
  cfg = DegradeConfig{};
  cfg.band = -1;
  EXPECT_THROW(degrade_to_real(s, cfg), ShapeError);
}
