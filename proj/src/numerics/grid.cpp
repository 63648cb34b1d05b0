#include "prk/grid.hpp"

#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"

namespace prk {

std::size_t DepthMap::valid_count() const { return count_set(valid); }

std::size_t EdgeMask::count() const { return count_set(mask); }

NormRoi NormRoi::from_patch(const PatchRoi& roi, int image_h, int image_w) {
  require(roi.row >= 0 && roi.col >= 0 && roi.height > 0 && roi.width > 0 &&
              roi.row + roi.height <= image_h && roi.col + roi.width <= image_w,
          "patch roi outside image bounds");
  return {static_cast<double>(roi.row) / image_h, static_cast<double>(roi.col) / image_w,
          static_cast<double>(roi.height) / image_h, static_cast<double>(roi.width) / image_w};
}

std::size_t count_set(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(), [](auto v) { return v != 0; }));
}

Mask mask_and(const Mask& a, const Mask& b) {
  require(a.same_shape(b), "mask_and: shape mismatch");
  Mask out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

Mask mask_or(const Mask& a, const Mask& b) {
  require(a.same_shape(b), "mask_or: shape mismatch");
  Mask out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

Mask mask_not(const Mask& a) {
  Mask out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ? 0 : 1;
  return out;
}

Mask dilate_square(const Mask& m, int radius) {
  if (radius <= 0) return m;
  const int h = m.rows(), w = m.cols();
  // Separable max filter: rows then columns.
  Mask tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t hit = 0;
      for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius) && !hit; ++xx) hit = m(y, xx) ? 1 : 0;
      tmp(y, x) = hit;
    }
  }
  Mask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t hit = 0;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius) && !hit; ++yy) hit = tmp(yy, x);
      out(y, x) = hit;
    }
  }
  return out;
}

namespace {

template <typename T>
Grid<T> crop_grid(const Grid<T>& g, const PatchRoi& roi) {
  require(roi.row >= 0 && roi.col >= 0 && roi.row + roi.height <= g.rows() && roi.col + roi.width <= g.cols(),
          "crop roi outside grid");
  Grid<T> out(roi.height, roi.width);
  for (int y = 0; y < roi.height; ++y)
    for (int x = 0; x < roi.width; ++x) out(y, x) = g(roi.row + y, roi.col + x);
  return out;
}

}  // namespace

Field crop(const Field& f, const PatchRoi& roi) { return crop_grid(f, roi); }
Mask crop(const Mask& m, const PatchRoi& roi) { return crop_grid(m, roi); }
LabelMap crop(const LabelMap& m, const PatchRoi& roi) { return crop_grid(m, roi); }
DepthMap crop(const DepthMap& d, const PatchRoi& roi) { return DepthMap(crop(d.depth, roi), crop(d.valid, roi)); }

Tensor crop_chw(const Tensor& t, const PatchRoi& roi) {
  require(t.ndim() == 3, "crop_chw expects [C,H,W]");
  const int c = t.dim(0);
  require(roi.row >= 0 && roi.col >= 0 && roi.row + roi.height <= t.dim(1) && roi.col + roi.width <= t.dim(2),
          "crop roi outside tensor");
  Tensor out({c, roi.height, roi.width});
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < roi.height; ++y)
      for (int x = 0; x < roi.width; ++x) out.at(k, y, x) = t.at(k, roi.row + y, roi.col + x);
  return out;
}

Field to_field(const Tensor& t) {
  require(t.ndim() == 3 && t.dim(0) == 1, "to_field expects [1,H,W], got " + shape_str(t.shape()));
  Field f(t.dim(1), t.dim(2));
  std::copy(t.data().begin(), t.data().end(), f.values().begin());
  return f;
}

Tensor to_tensor(const Field& f) { return Tensor({1, f.rows(), f.cols()}, f.values()); }

Tensor downsample_area(const Tensor& t, int factor) {
  require(t.ndim() == 3, "downsample_area expects [C,H,W]");
  require(factor >= 1 && t.dim(1) % factor == 0 && t.dim(2) % factor == 0,
          "downsample factor must divide the image size");
  if (factor == 1) return t;
  const int c = t.dim(0), h = t.dim(1) / factor, w = t.dim(2) / factor;
  Tensor out({c, h, w});
  const double inv = 1.0 / (factor * factor);
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) s += t.at(k, y * factor + dy, x * factor + dx);
        out.at(k, y, x) = s * inv;
      }
  return out;
}

Field gaussian_blur(const Field& f, int ksize, double sigma) {
  require(ksize >= 1 && ksize % 2 == 1, "gaussian kernel size must be odd");
  require(sigma > 0.0, "gaussian sigma must be positive");
  const int r = ksize / 2;
  std::vector<double> k(static_cast<std::size_t>(ksize));
  double norm = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += k[static_cast<std::size_t>(i + r)];
  }
  for (double& v : k) v /= norm;

  const int h = f.rows(), w = f.cols();
  Field tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) s += k[static_cast<std::size_t>(i + r)] * f(y, xx);
      }
      tmp(y, x) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) s += k[static_cast<std::size_t>(i + r)] * tmp(yy, x);
      }
      out(y, x) = s;
    }
  return out;
}

}  // namespace prk

namespace prk {

Mask label_boundary(const LabelMap& labels) {
  const int h = labels.rows(), w = labels.cols();
  Mask out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = labels(y, x);
      const bool edge = (y > 0 && labels(y - 1, x) != l) || (y + 1 < h && labels(y + 1, x) != l) ||
                        (x > 0 && labels(y, x - 1) != l) || (x + 1 < w && labels(y, x + 1) != l);
      out(y, x) = edge ? 1 : 0;
    }
  return out;
}

}  // namespace prk
