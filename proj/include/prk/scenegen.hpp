#pragma once

#include <cstdint>

#include "prk/grid.hpp"
#include "prk/tensor.hpp"

namespace prk {

struct SceneConfig {
  int height = 128;
  int width = 256;
  // Object 0 is the background plane; the rest are foreground shapes.
  int n_objects = 8;
  double d_min = 1.0;
  double d_max = 80.0;
  // Standard deviation of the per-pixel sensor noise added to the image.
  double image_noise = 0.005;
};

struct SceneMeta {
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  double d_min = 0.0;
  double d_max = 0.0;
};

/// Paired image / dense depth / segmentation.
///
/// Every visible object occupies its own log-depth layer and adjacent layers are
/// separated by a ratio of at least kLayerGap, so depth jumps happen exactly at
/// label boundaries and never inside an object.
struct Scene {
  Tensor image;  // [3,H,W], values k/255
  DepthMap depth;
  LabelMap seg;
  SceneMeta meta;
};

inline constexpr double kLayerGap = 1.08;

struct DegradeConfig {
  // Width of the band around label boundaries where ground truth may be missing.
  int band = 3;
  double drop_rate = 0.7;
  // Real-domain depth = warp_a * depth + warp_b.
  double warp_a = 1.0;
  double warp_b = 0.0;
  std::uint64_t seed = 0;
};

struct DepthWarp {
  double a = 1.0;
  double b = 0.0;
  double apply(double d) const { return a * d + b; }
};

/// Real-domain view of a scene: warped depth with holes near boundaries.
struct DegradedScene {
  Scene base;
  DepthMap sparse_depth;
  DepthWarp warp;
};

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg);

DegradedScene degrade_to_real(const Scene& scene, const DegradeConfig& cfg);

/// Pixels within `band` pixels of a label boundary: label-boundary pixels
/// dilated by band - 1 (square). band = 0 yields an empty mask.
Mask boundary_band(const LabelMap& seg, int band);

}  // namespace prk
