#pragma once

#include <cstdint>
#include <vector>

#include "prk/tensor.hpp"

namespace prk {

/// Row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  template <typename U>
  bool same_shape(const Grid<U>& o) const { return rows_ == o.rows() && cols_ == o.cols(); }

  T& operator()(int y, int x) { return v_[static_cast<std::size_t>(y) * cols_ + x]; }
  const T& operator()(int y, int x) const { return v_[static_cast<std::size_t>(y) * cols_ + x]; }
  T& operator[](std::size_t i) { return v_[i]; }
  const T& operator[](std::size_t i) const { return v_[i]; }

  std::vector<T>& values() { return v_; }
  const std::vector<T>& values() const { return v_; }

  bool operator==(const Grid& o) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> v_;
};

using Field = Grid<double>;
using Mask = Grid<std::uint8_t>;
using LabelMap = Grid<std::int32_t>;

/// Depth in meters plus validity; predictions are dense, real ground truth has holes.
struct DepthMap {
  Field depth;
  Mask valid;

  DepthMap() = default;
  explicit DepthMap(Field d) : depth(std::move(d)), valid(depth.rows(), depth.cols(), 1) {}
  DepthMap(Field d, Mask v) : depth(std::move(d)), valid(std::move(v)) {}

  int rows() const { return depth.rows(); }
  int cols() const { return depth.cols(); }
  std::size_t valid_count() const;
  bool dense() const { return valid_count() == valid.size(); }
};

enum class EdgeSource { pred_depth, gt_depth, segmentation, filtered_gt };

struct EdgeMask {
  Mask mask;
  EdgeSource source = EdgeSource::pred_depth;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

/// Rectangle in full-resolution pixel coordinates.
struct PatchRoi {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  bool operator==(const PatchRoi&) const = default;
};

/// Rectangle in normalized [0,1]^2 image coordinates.
struct NormRoi {
  double y0 = 0.0;
  double x0 = 0.0;
  double h = 1.0;
  double w = 1.0;

  static NormRoi full() { return {}; }
  static NormRoi from_patch(const PatchRoi& roi, int image_h, int image_w);
};

std::size_t count_set(const Mask& m);
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);
Mask dilate_square(const Mask& m, int radius);

Field crop(const Field& f, const PatchRoi& roi);
Mask crop(const Mask& m, const PatchRoi& roi);
LabelMap crop(const LabelMap& m, const PatchRoi& roi);
DepthMap crop(const DepthMap& d, const PatchRoi& roi);
Tensor crop_chw(const Tensor& t, const PatchRoi& roi);

// [1,H,W] <-> Field.
Field to_field(const Tensor& t);
Tensor to_tensor(const Field& f);

/// Box-average downsampling of a [C,H,W] tensor by an integer factor.
Tensor downsample_area(const Tensor& t, int factor);

/// Separable normalized Gaussian, zero padding outside the image.
Field gaussian_blur(const Field& f, int ksize, double sigma);

/// Pixels with at least one 4-neighbour carrying a different label.
Mask label_boundary(const LabelMap& labels);

}  // namespace prk
