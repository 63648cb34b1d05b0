#include "prk/tiling.hpp"

#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"
#include "prk/rng.hpp"

namespace prk {

TileMode parse_tile_mode(const std::string& s) {
  if (s == "grid16") return TileMode::grid16;
  if (s == "grid49") return TileMode::grid49;
  if (s == "random") return TileMode::random;
  throw ConfigError("unknown tiling mode '" + s + "' (expected grid16, grid49 or random)");
}

std::string to_string(TileMode m) {
  switch (m) {
    case TileMode::grid16: return "grid16";
    case TileMode::grid49: return "grid49";
    case TileMode::random: return "random";
  }
  return "?";
}

namespace {

bool covers(const std::vector<PatchRoi>& rois, int H, int W) {
  Mask m(H, W);
  for (const auto& r : rois)
    for (int y = r.row; y < r.row + r.height; ++y)
      for (int x = r.col; x < r.col + r.width; ++x) m(y, x) = 1;
  return count_set(m) == m.size();
}

}  // namespace

PatchGrid make_grid(int H, int W, int p_h, int p_w, TileMode mode, int random_n, std::uint64_t seed) {
  require(H > 0 && W > 0 && p_h > 0 && p_w > 0, "make_grid: non-positive size");
  require(p_h <= H && p_w <= W, "make_grid: patch larger than image");
  PatchGrid g{{}, mode, H, W, p_h, p_w};
  if (mode != TileMode::random) {
    require(H % p_h == 0 && W % p_w == 0, "make_grid: image " + std::to_string(H) + "x" + std::to_string(W) +
                                              " is not divisible by patch " + std::to_string(p_h) + "x" +
                                              std::to_string(p_w));
    require(H / p_h == 4 && W / p_w == 4, "make_grid: grid modes need a 4x4 base partition");
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g.rois.push_back({i * p_h, j * p_w, p_h, p_w});
    if (mode == TileMode::grid49) {
      require(p_h % 2 == 0 && p_w % 2 == 0, "make_grid: grid49 needs even patch sides");
      const int sh = p_h / 2, sw = p_w / 2;
      for (int i = 0; i < 3; ++i)  // shifted both ways
        for (int j = 0; j < 3; ++j) g.rois.push_back({sh + i * p_h, sw + j * p_w, p_h, p_w});
      for (int i = 0; i < 3; ++i)  // shifted down
        for (int j = 0; j < 4; ++j) g.rois.push_back({sh + i * p_h, j * p_w, p_h, p_w});
      for (int i = 0; i < 4; ++i)  // shifted right
        for (int j = 0; j < 3; ++j) g.rois.push_back({i * p_h, sw + j * p_w, p_h, p_w});
    }
    return g;
  }
  require(random_n >= 1, "make_grid: random mode needs at least one roi");
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(Rng::derive(seed + attempt, 0x7113));
    g.rois.clear();
    for (int k = 0; k < random_n; ++k) {
      // Uniform centre, roi clamped into the image.
      const double cy = rng.uniform(0.0, static_cast<double>(H));
      const double cx = rng.uniform(0.0, static_cast<double>(W));
      const int row = std::clamp(static_cast<int>(std::floor(cy - p_h / 2.0)), 0, H - p_h);
      const int col = std::clamp(static_cast<int>(std::floor(cx - p_w / 2.0)), 0, W - p_w);
      g.rois.push_back({row, col, p_h, p_w});
    }
    if (covers(g.rois, H, W)) return g;
  }
  throw ShapeError("make_grid: could not cover the image with " + std::to_string(random_n) + " random rois");
}

Field patch_weights(int p_h, int p_w, BlendWeights kind) {
  Field w(p_h, p_w, 1.0);
  if (kind == BlendWeights::uniform) return w;
  // Raised cosine over pixel centres, strictly positive at the border.
  auto taper = [](int i, int n) { return 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 0.5) / n); };
  for (int y = 0; y < p_h; ++y)
    for (int x = 0; x < p_w; ++x) w(y, x) = taper(y, p_h) * taper(x, p_w);
  return w;
}

DepthMap assemble(const std::vector<DepthMap>& preds, const PatchGrid& grid, BlendWeights kind) {
  require(preds.size() == grid.rois.size(), "assemble: prediction count does not match the grid");
  const int H = grid.image_h, W = grid.image_w;
  Field sum(H, W, 0.0), weight(H, W, 0.0);
  Grid<int> contributors(H, W, 0);
  Grid<int> last(H, W, -1);
  Field lo(H, W, INFINITY), hi(H, W, -INFINITY);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const PatchRoi& r = grid.rois[i];
    require(preds[i].rows() == r.height && preds[i].cols() == r.width, "assemble: prediction " + std::to_string(i) +
                                                                           " does not match its roi");
    const Field w = patch_weights(r.height, r.width, kind);
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x) {
        const int Y = r.row + y, X = r.col + x;
        sum(Y, X) += w(y, x) * preds[i].depth(y, x);
        weight(Y, X) += w(y, x);
        ++contributors(Y, X);
        lo(Y, X) = std::min(lo(Y, X), preds[i].depth(y, x));
        hi(Y, X) = std::max(hi(Y, X), preds[i].depth(y, x));
        last(Y, X) = static_cast<int>(i);
      }
  }
  Field out(H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (contributors(y, x) == 0)
        throw ShapeError("assemble: pixel (" + std::to_string(y) + ", " + std::to_string(x) + ") is not covered");
      if (contributors(y, x) == 1) {
        // Single contributor: paste exactly.
        const PatchRoi& r = grid.rois[static_cast<std::size_t>(last(y, x))];
        out(y, x) = preds[static_cast<std::size_t>(last(y, x))].depth(y - r.row, x - r.col);
      } else {
        // Clamping removes rounding drift outside the contributors' range, so
        // identical contributions reproduce their value exactly.
        out(y, x) = std::clamp(sum(y, x) / weight(y, x), lo(y, x), hi(y, x));
      }
    }
  return DepthMap(std::move(out));
}

}  // namespace prk
