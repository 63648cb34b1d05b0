#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prk/grid.hpp"

namespace prk {

enum class TileMode { grid16, grid49, random };

TileMode parse_tile_mode(const std::string& s);
std::string to_string(TileMode m);

struct PatchGrid {
  std::vector<PatchRoi> rois;
  TileMode mode = TileMode::grid16;
  int image_h = 0;
  int image_w = 0;
  int patch_h = 0;
  int patch_w = 0;
};

/// grid16: the 4x4 partition (patch = image / 4). grid49: that partition plus
/// rois shifted by half a patch vertically, horizontally and both (16 + 12 + 12 + 9).
/// random: `random_n` uniformly placed rois, re-seeded until the image is covered.
PatchGrid make_grid(int H, int W, int p_h, int p_w, TileMode mode, int random_n = 128, std::uint64_t seed = 0);

enum class BlendWeights { raised_cosine, uniform };

/// Per-pixel weight of a patch-local position under the given blending scheme.
Field patch_weights(int p_h, int p_w, BlendWeights kind);

DepthMap assemble(const std::vector<DepthMap>& preds, const PatchGrid& grid,
                  BlendWeights kind = BlendWeights::raised_cosine);

}  // namespace prk
