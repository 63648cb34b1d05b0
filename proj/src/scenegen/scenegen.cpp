#include "prk/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prk/errors.hpp"
#include "prk/rng.hpp"

namespace prk {

namespace {

enum class ShapeKind { background, rect, ellipse, bar };

struct Object {
  ShapeKind kind = ShapeKind::background;
  // Bounding box, inclusive-exclusive.
  int y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  double cy = 0.0, cx = 0.0;
  // Relative inverse-depth gradient per pixel.
  double gy = 0.0, gx = 0.0;
  double extent = 0.0;  // max relative inverse-depth deviation over the bbox
  double inv_center = 0.0;
  double albedo_r = 0.5, albedo_g = 0.5;

  bool covers(int y, int x) const {
    if (y < y0 || y >= y1 || x < x0 || x >= x1) return false;
    if (kind != ShapeKind::ellipse) return true;
    const double ry = 0.5 * (y1 - y0), rx = 0.5 * (x1 - x0);
    const double dy = (y + 0.5 - cy) / ry, dx = (x + 0.5 - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }

  double depth_at(int y, int x) const {
    return 1.0 / (inv_center * (1.0 + gy * (y + 0.5 - cy) + gx * (x + 0.5 - cx)));
  }

  double log_span() const { return std::log((1.0 + extent) / (1.0 - extent)); }
};

void place_shape(Object& o, Rng& rng, int h, int w) {
  const double u = rng.uniform();
  int bh, bw;
  if (u < 0.4) {
    o.kind = ShapeKind::rect;
    bh = rng.uniform_int(std::max(6, h / 12), std::max(8, h / 2));
    bw = rng.uniform_int(std::max(6, w / 24), std::max(8, w / 4));
  } else if (u < 0.8) {
    o.kind = ShapeKind::ellipse;
    bh = rng.uniform_int(std::max(8, h / 10), std::max(10, h / 2));
    bw = rng.uniform_int(std::max(8, w / 20), std::max(10, w / 4));
  } else {
    o.kind = ShapeKind::bar;
    const int thick = rng.uniform_int(2, 5);
    const int len = rng.uniform_int(std::max(8, h / 4), std::max(10, (3 * h) / 4));
    if (rng.bernoulli(0.7)) {
      bh = len;
      bw = thick;
    } else {
      bh = thick;
      bw = std::min(w, 2 * len);
    }
  }
  bh = std::min(bh, h);
  bw = std::min(bw, w);
  o.y0 = rng.uniform_int(0, h - bh);
  o.x0 = rng.uniform_int(0, w - bw);
  o.y1 = o.y0 + bh;
  o.x1 = o.x0 + bw;
}

constexpr double kSlackSkew = 3.0;

bool next_log_split(std::vector<Object>& objects, double budget, double gap) {
  double need = gap * static_cast<double>(objects.size() - 1);
  for (const auto& o : objects) need += o.log_span();
  return need <= budget;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  require(cfg.height >= 32 && cfg.width >= 32, "scene must be at least 32x32");
  require(cfg.n_objects >= 1, "scene needs at least one object");
  require(cfg.d_min > 0.0, "d_min must be positive");
  require(cfg.d_min < cfg.d_max, "degenerate depth range: d_min >= d_max");
  const int h = cfg.height, w = cfg.width;
  Rng rng(seed);

  std::vector<Object> objects(static_cast<std::size_t>(cfg.n_objects));
  for (std::size_t k = 0; k < objects.size(); ++k) {
    Object& o = objects[k];
    if (k == 0) {
      o.kind = ShapeKind::background;
      o.y0 = 0, o.y1 = h, o.x0 = 0, o.x1 = w;
    } else {
      place_shape(o, rng, h, w);
    }
    o.cy = 0.5 * (o.y0 + o.y1);
    o.cx = 0.5 * (o.x0 + o.x1);
    const bool tilted = k == 0 ? rng.bernoulli(0.8) : rng.bernoulli(0.5);
    if (tilted) {
      const double gmax = k == 0 ? 0.0035 : 0.003;
      o.gy = rng.uniform(-gmax, gmax);
      o.gx = rng.uniform(-gmax, gmax) * 0.5;
    }
    o.albedo_r = rng.uniform(0.15, 0.95);
    o.albedo_g = rng.uniform(0.15, 0.95);
  }

  const double log_range = std::log(cfg.d_max / cfg.d_min);
  const double gap = std::log(kLayerGap);
  // Shrink tilts until every layer fits into the depth range.
  for (int attempt = 0;; ++attempt) {
    for (auto& o : objects) o.extent = std::abs(o.gy) * 0.5 * (o.y1 - o.y0) + std::abs(o.gx) * 0.5 * (o.x1 - o.x0);
    if (next_log_split(objects, log_range, gap)) break;
    require(attempt < 64, "depth range too narrow for the requested number of objects");
    for (auto& o : objects) o.gy *= 0.5, o.gx *= 0.5;
    if (attempt > 32)
      for (auto& o : objects) o.gy = 0.0, o.gx = 0.0;
  }

  // Near-to-far order: a random permutation of foreground objects, background last.
  std::vector<std::size_t> order(objects.size() - 1);
  std::iota(order.begin(), order.end(), std::size_t{1});
  rng.shuffle(order.begin(), order.end());
  order.push_back(0);

  double spans = 0.0;
  for (const auto& o : objects) spans += o.log_span();
  const double slack = log_range - spans - gap * static_cast<double>(objects.size() - 1);
  std::vector<double> pieces(objects.size() + 1);
  double total = 0.0;
  // Cubed exponential pieces: most neighbours in depth sit close together and a
  // few gaps take most of the range.
  for (double& p : pieces) total += (p = std::pow(-std::log(1.0 - rng.uniform()), kSlackSkew));
  for (double& p : pieces) p *= slack / total;

  double cur = std::log(cfg.d_min) + pieces[0];
  for (std::size_t i = 0; i < order.size(); ++i) {
    Object& o = objects[order[i]];
    // log depth over the bbox spans [cur, cur + span]
    o.inv_center = std::exp(-cur) / (1.0 + o.extent);
    cur += o.log_span() + gap + pieces[i + 1];
  }

  // Rank of each object in the near-to-far order; lower rank wins occlusion.
  std::vector<std::size_t> rank(objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  Scene scene;
  scene.meta = {seed, h, w, cfg.d_min, cfg.d_max};
  scene.seg = LabelMap(h, w, 0);
  Field depth(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < objects.size(); ++k)
        if (objects[k].covers(y, x) && rank[k] < rank[best]) best = k;
      scene.seg(y, x) = static_cast<std::int32_t>(best);
      const double d = std::clamp(objects[best].depth_at(y, x), cfg.d_min, cfg.d_max);
      // Stored at single precision so file round trips are lossless.
      depth(y, x) = static_cast<double>(static_cast<float>(d));
    }
  }
  scene.depth = DepthMap(std::move(depth));

  // Albedo in red/green, atmospheric haze that grows with log depth. Blue carries
  // the haze almost exclusively.
  constexpr double kHaze = 0.9;
  constexpr double kHazeColor[3] = {0.55, 0.65, 1.0};
  constexpr double kBlueAlbedo = 0.1;
  Rng noise(Rng::derive(seed, 0xA11CE));
  scene.image = Tensor({3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Object& o = objects[static_cast<std::size_t>(scene.seg(y, x))];
      const double s = std::log(scene.depth.depth(y, x) / cfg.d_min) / log_range;
      const double albedo[3] = {o.albedo_r, o.albedo_g, kBlueAlbedo};
      for (int c = 0; c < 3; ++c) {
        double v = albedo[c] * (1.0 - kHaze * s) + kHazeColor[c] * kHaze * s;
        v += cfg.image_noise * noise.normal();
        v = std::clamp(v, 0.0, 1.0);
        scene.image.at(c, y, x) = std::round(v * 255.0) / 255.0;
      }
    }
  }
  return scene;
}

Mask boundary_band(const LabelMap& seg, int band) {
  if (band <= 0) return Mask(seg.rows(), seg.cols(), 0);
  return dilate_square(label_boundary(seg), band - 1);
}

DegradedScene degrade_to_real(const Scene& scene, const DegradeConfig& cfg) {
  require(cfg.band >= 0, "band must be non-negative");
  require(cfg.drop_rate >= 0.0 && cfg.drop_rate <= 1.0, "drop_rate must lie in [0,1]");
  require(cfg.warp_a > 0.0, "warp scale must be positive");

  DegradedScene out;
  out.base = scene;
  out.warp = {cfg.warp_a, cfg.warp_b};

  const Mask band = boundary_band(scene.seg, cfg.band);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < band.size(); ++i)
    if (band[i]) candidates.push_back(i);
  Rng rng(Rng::derive(scene.meta.seed, 0xD209 + cfg.seed));
  rng.shuffle(candidates.begin(), candidates.end());
  const auto n_drop = static_cast<std::size_t>(std::llround(cfg.drop_rate * static_cast<double>(candidates.size())));

  const int h = scene.depth.rows(), w = scene.depth.cols();
  Mask valid(h, w, 1);
  for (std::size_t i = 0; i < n_drop; ++i) valid[candidates[i]] = 0;
  Field depth(h, w, 0.0);
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (valid[i]) depth[i] = out.warp.apply(scene.depth.depth[i]);
  out.sparse_depth = DepthMap(std::move(depth), std::move(valid));
  return out;
}

}  // namespace prk
