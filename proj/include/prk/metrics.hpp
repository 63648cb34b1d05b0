#pragma once

#include <cstddef>

#include "prk/grid.hpp"

namespace prk {

/// Relative depth-gradient threshold used for every depth edge map.
inline constexpr double kDepthEdgeThreshold = 0.05;
/// Gaussian used to expand GT depth edges and to mask boundary pixels.
inline constexpr int kEdgeBlurKernel = 7;
inline constexpr double kEdgeBlurSigma = kEdgeBlurKernel / 4.0;
inline constexpr double kDbeTheta = 10.0;

/// Raw 3x3 Sobel magnitude, replicate padding at the border.
Field sobel_magnitude(const Field& f);

/// mask = |Sobel(f)| > threshold.
EdgeMask sobel_edges(const Field& f, double threshold);

/// Any 4-neighbour label mismatch.
EdgeMask seg_edges(const LabelMap& seg);

/// Edges of a depth map: the Sobel central difference (magnitude / 4) relative
/// to the local depth exceeds `rel_threshold`. Invalid neighbours are replaced by
/// the centre value and invalid pixels never become edges.
EdgeMask depth_edges(const DepthMap& d, double rel_threshold = kDepthEdgeThreshold,
                     EdgeSource source = EdgeSource::pred_depth);

/// Gaussian blur (k=7) followed by binarisation at > 0.
Mask expand_edges(const Mask& m);

/// seg edges AND expanded GT depth edges.
EdgeMask filtered_gt_edges(const LabelMap& seg, const DepthMap& gt_depth);

/// Valid pixels away from filtered GT edges.
Mask nonboundary_scale_mask(const EdgeMask& m_hat);

/// Exact Euclidean distance to the nearest set pixel.
Field edt(const Mask& mask);

struct DbeResult {
  double eps_acc = 0.0;
  double eps_comp = 0.0;
};
DbeResult dbe(const EdgeMask& pred_edges, const EdgeMask& gt_edges, double theta = kDbeTheta);

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
PrfResult edge_prf(const EdgeMask& pred_edges, const EdgeMask& gt_edges, int tol = 1);

struct ScaleMetrics {
  double rmse = 0.0;
  double rel = 0.0;
  double silog = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  std::size_t n = 0;
};
ScaleMetrics scale_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& mask);

struct SeeResult {
  double value = 0.0;
  bool no_edges = false;
};
SeeResult soft_edge_error(const DepthMap& pred, const DepthMap& gt, const EdgeMask& gt_edges, int radius = 1);

struct MetricsReport {
  ScaleMetrics scale;
  // Scale metrics restricted to valid pixels away from boundaries.
  ScaleMetrics scale_nonboundary;
  double see = 0.0;
  PrfResult prf;
  DbeResult dbe;
  bool has_boundary = false;
  std::size_t n_valid_pixels = 0;
};

/// Full protocol for one image. GT holes are allowed; seg provides the boundary proxy.
MetricsReport evaluate_prediction(const DepthMap& pred, const DepthMap& gt, const LabelMap& seg);

/// Pixel-count weighted mean of per-image reports.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

}  // namespace prk
