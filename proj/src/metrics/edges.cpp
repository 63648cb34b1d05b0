#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"
#include "prk/metrics.hpp"

namespace prk {

namespace {

// Sobel on a field whose out-of-range or invalid taps are replaced through `fetch`.
template <typename Fetch>
double sobel_at(int y, int x, Fetch&& fetch) {
  const double a = fetch(y - 1, x - 1), b = fetch(y - 1, x), c = fetch(y - 1, x + 1);
  const double d = fetch(y, x - 1), f = fetch(y, x + 1);
  const double g = fetch(y + 1, x - 1), h = fetch(y + 1, x), i = fetch(y + 1, x + 1);
  const double gx = (c + 2.0 * f + i) - (a + 2.0 * d + g);
  const double gy = (g + 2.0 * h + i) - (a + 2.0 * b + c);
  return std::sqrt(gx * gx + gy * gy);
}

}  // namespace

Field sobel_magnitude(const Field& f) {
  const int h = f.rows(), w = f.cols();
  Field out(h, w);
  auto fetch = [&](int y, int x) { return f(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = sobel_at(y, x, fetch);
  return out;
}

EdgeMask sobel_edges(const Field& f, double threshold) {
  const Field mag = sobel_magnitude(f);
  EdgeMask e{Mask(f.rows(), f.cols()), EdgeSource::pred_depth};
  for (std::size_t i = 0; i < mag.size(); ++i) e.mask[i] = mag[i] > threshold ? 1 : 0;
  return e;
}

EdgeMask seg_edges(const LabelMap& seg) { return {label_boundary(seg), EdgeSource::segmentation}; }

EdgeMask depth_edges(const DepthMap& d, double rel_threshold, EdgeSource source) {
  require(d.valid.same_shape(d.depth), "depth/validity shape mismatch");
  const int h = d.rows(), w = d.cols();
  EdgeMask e{Mask(h, w), source};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!d.valid(y, x)) continue;
      const double centre = d.depth(y, x);
      auto fetch = [&](int yy, int xx) {
        yy = std::clamp(yy, 0, h - 1);
        xx = std::clamp(xx, 0, w - 1);
        return d.valid(yy, xx) ? d.depth(yy, xx) : centre;
      };
      const double grad = sobel_at(y, x, fetch) / 4.0;
      e.mask(y, x) = grad > rel_threshold * std::abs(centre) ? 1 : 0;
    }
  }
  return e;
}

Mask expand_edges(const Mask& m) {
  Field f(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) f[i] = m[i] ? 1.0 : 0.0;
  const Field b = gaussian_blur(f, kEdgeBlurKernel, kEdgeBlurSigma);
  Mask out(m.rows(), m.cols());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] > 0.0 ? 1 : 0;
  return out;
}

EdgeMask filtered_gt_edges(const LabelMap& seg, const DepthMap& gt_depth) {
  require(seg.same_shape(gt_depth.depth), "segmentation/depth shape mismatch");
  const EdgeMask gt_e = depth_edges(gt_depth, kDepthEdgeThreshold, EdgeSource::gt_depth);
  return {mask_and(label_boundary(seg), expand_edges(gt_e.mask)), EdgeSource::filtered_gt};
}

Mask nonboundary_scale_mask(const EdgeMask& m_hat) { return mask_not(expand_edges(m_hat.mask)); }

}  // namespace prk
