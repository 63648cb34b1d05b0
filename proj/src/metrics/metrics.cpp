#include <algorithm>
#include <cmath>
#include <string>

#include "prk/errors.hpp"
#include "prk/metrics.hpp"

namespace prk {

DbeResult dbe(const EdgeMask& pred_edges, const EdgeMask& gt_edges, double theta) {
  require(pred_edges.mask.same_shape(gt_edges.mask), "dbe: mask shape mismatch");
  if (pred_edges.empty()) throw ShapeError("dbe: predicted edge mask is empty");
  if (gt_edges.empty()) throw ShapeError("dbe: reference edge mask is empty");
  const Field dist_gt = edt(gt_edges.mask);
  const Field dist_pred = edt(pred_edges.mask);
  auto truncated_mean = [theta](const Mask& sel, const Field& dist) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < sel.size(); ++i)
      if (sel[i]) s += std::min(dist[i], theta), ++n;
    return s / static_cast<double>(n);
  };
  return {truncated_mean(pred_edges.mask, dist_gt), truncated_mean(gt_edges.mask, dist_pred)};
}

PrfResult edge_prf(const EdgeMask& pred_edges, const EdgeMask& gt_edges, int tol) {
  require(pred_edges.mask.same_shape(gt_edges.mask), "edge_prf: mask shape mismatch");
  require(tol >= 0, "edge_prf: negative tolerance");
  const std::size_t n_gt = gt_edges.count();
  if (n_gt == 0) throw ShapeError("edge_prf: reference edge mask is empty, recall undefined");
  const std::size_t n_pred = pred_edges.count();
  const Mask near_gt = dilate_square(gt_edges.mask, tol);
  const Mask near_pred = dilate_square(pred_edges.mask, tol);
  PrfResult r;
  if (n_pred > 0) r.precision = static_cast<double>(count_set(mask_and(pred_edges.mask, near_gt))) / static_cast<double>(n_pred);
  r.recall = static_cast<double>(count_set(mask_and(gt_edges.mask, near_pred))) / static_cast<double>(n_gt);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

ScaleMetrics scale_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& mask) {
  require(pred.depth.same_shape(gt.depth) && mask.same_shape(gt.depth), "scale_metrics: shape mismatch");
  ScaleMetrics m;
  double se = 0.0, rel = 0.0, e1 = 0.0, e2 = 0.0, l10 = 0.0;
  std::size_t good = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double d = gt.depth[i], p = pred.depth[i];
    if (!(d > 0.0) || !(p > 0.0)) throw NumericalError("scale_metrics: non-positive depth under mask");
    const double e = std::log(p) - std::log(d);
    se += (p - d) * (p - d);
    rel += std::abs(p - d) / d;
    e1 += e;
    e2 += e * e;
    l10 += std::abs(std::log10(d) - std::log10(p));
    if (std::max(d / p, p / d) < 1.25) ++good;
    ++m.n;
  }
  if (m.n == 0) throw ShapeError("scale_metrics: empty mask");
  const double n = static_cast<double>(m.n);
  m.rmse = std::sqrt(se / n);
  m.rel = rel / n;
  m.silog = std::sqrt(std::max(0.0, e2 / n - (e1 / n) * (e1 / n))) * 100.0;
  m.log10 = l10 / n;
  m.delta1 = static_cast<double>(good) / n;
  return m;
}

SeeResult soft_edge_error(const DepthMap& pred, const DepthMap& gt, const EdgeMask& gt_edges, int radius) {
  require(pred.depth.same_shape(gt.depth) && gt_edges.mask.same_shape(gt.depth), "soft_edge_error: shape mismatch");
  const int h = gt.rows(), w = gt.cols();
  double total = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!gt_edges.mask(y, x) || !gt.valid(y, x)) continue;
      double best = INFINITY;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx)
          best = std::min(best, std::abs(pred.depth(yy, xx) - gt.depth(y, x)));
      total += best;
      ++n;
    }
  }
  if (n == 0) return {0.0, true};
  return {total / static_cast<double>(n), false};
}

MetricsReport evaluate_prediction(const DepthMap& pred, const DepthMap& gt, const LabelMap& seg) {
  MetricsReport r;
  r.scale = scale_metrics(pred, gt, gt.valid);
  r.n_valid_pixels = r.scale.n;
  const EdgeMask m_hat = filtered_gt_edges(seg, gt);
  const Mask nb = mask_and(gt.valid, nonboundary_scale_mask(m_hat));
  if (count_set(nb) > 0) r.scale_nonboundary = scale_metrics(pred, gt, nb);
  const EdgeMask pred_e = depth_edges(pred, kDepthEdgeThreshold, EdgeSource::pred_depth);
  r.see = soft_edge_error(pred, gt, m_hat, 1).value;
  if (!m_hat.empty()) {
    r.has_boundary = true;
    r.prf = edge_prf(pred_e, m_hat, 1);
    if (!pred_e.empty()) {
      r.dbe = dbe(pred_e, m_hat);
    } else {
      r.dbe = {0.0, kDbeTheta};
    }
  }
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  MetricsReport out;
  double wsum = 0.0, bsum = 0.0, nbsum = 0.0;
  for (const auto& r : reports) {
    const double wt = static_cast<double>(r.scale.n);
    wsum += wt;
    out.scale.rmse += wt * r.scale.rmse * r.scale.rmse;
    out.scale.rel += wt * r.scale.rel;
    out.scale.silog += wt * r.scale.silog;
    out.scale.log10 += wt * r.scale.log10;
    out.scale.delta1 += wt * r.scale.delta1;
    out.scale.n += r.scale.n;
    out.see += wt * r.see;
    const double wn = static_cast<double>(r.scale_nonboundary.n);
    nbsum += wn;
    out.scale_nonboundary.rmse += wn * r.scale_nonboundary.rmse * r.scale_nonboundary.rmse;
    out.scale_nonboundary.rel += wn * r.scale_nonboundary.rel;
    out.scale_nonboundary.silog += wn * r.scale_nonboundary.silog;
    out.scale_nonboundary.log10 += wn * r.scale_nonboundary.log10;
    out.scale_nonboundary.delta1 += wn * r.scale_nonboundary.delta1;
    out.scale_nonboundary.n += r.scale_nonboundary.n;
    if (r.has_boundary) {
      bsum += wt;
      out.prf.precision += wt * r.prf.precision;
      out.prf.recall += wt * r.prf.recall;
      out.prf.f1 += wt * r.prf.f1;
      out.dbe.eps_acc += wt * r.dbe.eps_acc;
      out.dbe.eps_comp += wt * r.dbe.eps_comp;
    }
  }
  if (wsum > 0.0) {
    out.scale.rmse = std::sqrt(out.scale.rmse / wsum);
    out.scale.rel /= wsum;
    out.scale.silog /= wsum;
    out.scale.log10 /= wsum;
    out.scale.delta1 /= wsum;
    out.see /= wsum;
  }
  if (nbsum > 0.0) {
    out.scale_nonboundary.rmse = std::sqrt(out.scale_nonboundary.rmse / nbsum);
    out.scale_nonboundary.rel /= nbsum;
    out.scale_nonboundary.silog /= nbsum;
    out.scale_nonboundary.log10 /= nbsum;
    out.scale_nonboundary.delta1 /= nbsum;
  }
  if (bsum > 0.0) {
    out.has_boundary = true;
    out.prf.precision /= bsum;
    out.prf.recall /= bsum;
    out.prf.f1 /= bsum;
    out.dbe.eps_acc /= bsum;
    out.dbe.eps_comp /= bsum;
  }
  out.n_valid_pixels = out.scale.n;
  return out;
}

}  // namespace prk
