#include <gtest/gtest.h>

#include <cmath>

#include "prk/errors.hpp"
#include "prk/metrics.hpp"
#include "prk/rng.hpp"

using namespace prk;

namespace {

DepthMap row_map(std::vector<double> v) {
  Field f(1, static_cast<int>(v.size()));
  f.values() = std::move(v);
  return DepthMap(std::move(f));
}

Field step_field(int h, int w, int split, double left, double right) {
  Field f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f(y, x) = x < split ? left : right;
  return f;
}

EdgeMask column_mask(int h, int w, int col) {
  EdgeMask e{Mask(h, w)};
  for (int y = 0; y < h; ++y) e.mask(y, col) = 1;
  return e;
}

}  // namespace

TEST(ScaleMetrics, IdentityIsPerfect) {
  const DepthMap d = row_map({1.0, 2.0, 5.0});
  const ScaleMetrics m = scale_metrics(d, d, d.valid);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.rel, 0.0);
  EXPECT_EQ(m.silog, 0.0);
  EXPECT_EQ(m.log10, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
}

TEST(ScaleMetrics, HandExample) {
  const DepthMap gt = row_map({1.0, 2.0}), pred = row_map({1.0, 3.0});
  const ScaleMetrics m = scale_metrics(pred, gt, gt.valid);
  EXPECT_NEAR(m.rmse, 0.7071067811865476, 1e-12);
  EXPECT_DOUBLE_EQ(m.rel, 0.25);
}

TEST(ScaleMetrics, DeltaThresholdBoundary) {
  const DepthMap gt = row_map({1.0, 2.0, 4.0});
  DepthMap pred = gt;
  for (double& v : pred.depth.values()) v *= 1.3;
  EXPECT_EQ(scale_metrics(pred, gt, gt.valid).delta1, 0.0);
}

TEST(ScaleMetrics, BehaviourUnderCommonScaling) {
  Rng rng(3);
  Field g(4, 4), p(4, 4);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(1.0, 10.0), p[i] = g[i] * rng.uniform(0.7, 1.4);
  const DepthMap gt(g), pred(p);
  const ScaleMetrics a = scale_metrics(pred, gt, gt.valid);
  DepthMap g2 = gt, p2 = pred;
  for (double& v : g2.depth.values()) v *= 3.5;
  for (double& v : p2.depth.values()) v *= 3.5;
  const ScaleMetrics b = scale_metrics(p2, g2, g2.valid);
  EXPECT_EQ(a.delta1, b.delta1);
  EXPECT_NEAR(b.rmse, 3.5 * a.rmse, 1e-12);
  EXPECT_NEAR(a.silog, b.silog, 1e-9);
}

TEST(ScaleMetrics, RejectsEmptyMask) {
  const DepthMap d = row_map({1.0, 2.0});
  EXPECT_THROW(scale_metrics(d, d, Mask(1, 2, 0)), ShapeError);
}

TEST(SoftEdgeError, Cases) {
  const DepthMap gt(step_field(6, 8, 4, 1.0, 5.0));
  const EdgeMask edges = depth_edges(gt);
  ASSERT_FALSE(edges.empty());
  EXPECT_EQ(soft_edge_error(gt, gt, edges, 1).value, 0.0);
  const DepthMap shifted(step_field(6, 8, 5, 1.0, 5.0));
  EXPECT_EQ(soft_edge_error(shifted, gt, edges, 1).value, 0.0);
  DepthMap offset = gt;
  for (double& v : offset.depth.values()) v += 0.5;
  EXPECT_DOUBLE_EQ(soft_edge_error(offset, gt, edges, 1).value, 0.5);
  const SeeResult none = soft_edge_error(gt, gt, EdgeMask{Mask(6, 8)}, 1);
  EXPECT_TRUE(none.no_edges);
  EXPECT_EQ(none.value, 0.0);
}

TEST(SobelEdges, ConstantHasNoEdges) { EXPECT_TRUE(sobel_edges(Field(5, 5, 3.0), 1e-9).empty()); }

TEST(SobelEdges, StepMarksAdjacentColumns) {
  const Field f = step_field(5, 8, 4, 0.0, 10.0);
  EXPECT_DOUBLE_EQ(sobel_magnitude(f)(2, 3), 40.0);
  EXPECT_DOUBLE_EQ(sobel_magnitude(f)(2, 4), 40.0);
  const EdgeMask e = sobel_edges(f, 1.0);
  Mask want(5, 8);
  for (int y = 0; y < 5; ++y) want(y, 3) = want(y, 4) = 1;
  EXPECT_EQ(e.mask, want);
}

TEST(SegEdges, LabelBoundary) {
  LabelMap seg(4, 6, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 3; x < 6; ++x) seg(y, x) = 1;
  const EdgeMask e = seg_edges(seg);
  EXPECT_EQ(e.source, EdgeSource::segmentation);
  Mask want(4, 6);
  for (int y = 0; y < 4; ++y) want(y, 2) = want(y, 3) = 1;
  EXPECT_EQ(e.mask, want);
}

TEST(DepthEdges, HolesNeverProduceEdges) {
  DepthMap d(step_field(5, 8, 4, 1.0, 5.0));
  for (int y = 0; y < 5; ++y) d.valid(y, 4) = 0;
  // Both sides of the step only see the hole column, which is filled with their own value.
  EXPECT_TRUE(depth_edges(d).empty());
  d.valid(2, 4) = 1;
  const EdgeMask e = depth_edges(d);
  EXPECT_EQ(e.mask(2, 4), 1);
  EXPECT_EQ(e.mask(0, 4), 0);
}

TEST(FilteredGtEdges, IdenticalEdgesPassThrough) {
  LabelMap seg(6, 10, 0);
  for (int y = 0; y < 6; ++y)
    for (int x = 5; x < 10; ++x) seg(y, x) = 1;
  const DepthMap gt(step_field(6, 10, 5, 2.0, 6.0));
  EXPECT_EQ(filtered_gt_edges(seg, gt).mask, seg_edges(seg).mask);
}

TEST(FilteredGtEdges, FlatDepthEdgeIsRemoved) {
  LabelMap seg(6, 10, 0);
  for (int y = 0; y < 6; ++y)
    for (int x = 5; x < 10; ++x) seg(y, x) = 1;
  EXPECT_TRUE(filtered_gt_edges(seg, DepthMap(Field(6, 10, 4.0))).empty());
}

TEST(FilteredGtEdges, BlurSupportIsThreePixels) {
  // seg edges at columns 9 and 10, depth edges at columns 13 and 14
  LabelMap seg(8, 24, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 10; x < 24; ++x) seg(y, x) = 1;
  const DepthMap gt(step_field(8, 24, 14, 2.0, 6.0));
  const EdgeMask m = filtered_gt_edges(seg, gt);
  EXPECT_EQ(m.mask, column_mask(8, 24, 10).mask);
}

TEST(EdgePrf, Cases) {
  const EdgeMask gt = column_mask(8, 8, 3);
  const PrfResult id = edge_prf(gt, gt, 1);
  EXPECT_EQ(id.precision, 1.0);
  EXPECT_EQ(id.recall, 1.0);
  EXPECT_EQ(id.f1, 1.0);
  const PrfResult none = edge_prf(EdgeMask{Mask(8, 8)}, gt, 1);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  const PrfResult sh = edge_prf(column_mask(8, 8, 4), gt, 1);
  EXPECT_EQ(sh.precision, 1.0);
  EXPECT_EQ(sh.recall, 1.0);
  EXPECT_EQ(edge_prf(column_mask(8, 8, 5), gt, 1).recall, 0.0);
  EXPECT_THROW(edge_prf(gt, EdgeMask{Mask(8, 8)}, 1), ShapeError);
}

TEST(Edt, AllSetIsZero) {
  const Field d = edt(Mask(4, 5, 1));
  for (double v : d.values()) EXPECT_EQ(v, 0.0);
}

TEST(Edt, SingleCornerPixel) {
  Mask m(3, 3);
  m(0, 0) = 1;
  const Field d = edt(m);
  const double want[9] = {0, 1, 2, 1, std::sqrt(2.0), std::sqrt(5.0), 2, std::sqrt(5.0), std::sqrt(8.0)};
  for (int i = 0; i < 9; ++i) EXPECT_EQ(d[static_cast<std::size_t>(i)], want[i]);
}

TEST(Edt, RejectsEmptyMask) { EXPECT_THROW(edt(Mask(3, 3)), ShapeError); }

TEST(Dbe, Cases) {
  const EdgeMask gt = column_mask(10, 20, 8);
  const DbeResult same = dbe(gt, gt);
  EXPECT_EQ(same.eps_acc, 0.0);
  EXPECT_EQ(same.eps_comp, 0.0);
  const DbeResult sh = dbe(column_mask(10, 20, 10), gt);
  EXPECT_EQ(sh.eps_acc, 2.0);
  EXPECT_EQ(sh.eps_comp, 2.0);

  EdgeMask a{Mask(4, 80)}, b{Mask(4, 80)};
  a.mask(1, 2) = 1;
  b.mask(1, 52) = 1;
  const DbeResult far = dbe(a, b, 10.0);
  EXPECT_EQ(far.eps_acc, 10.0);
  EXPECT_EQ(far.eps_comp, 10.0);
  EXPECT_THROW(dbe(EdgeMask{Mask(4, 80)}, b), ShapeError);
  EXPECT_THROW(dbe(a, EdgeMask{Mask(4, 80)}), ShapeError);
}

TEST(Dbe, SwappingRolesSwapsTerms) {
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    EdgeMask a{Mask(12, 15)}, b{Mask(12, 15)};
    for (std::size_t i = 0; i < a.mask.size(); ++i) a.mask[i] = rng.bernoulli(0.08), b.mask[i] = rng.bernoulli(0.08);
    a.mask[0] = 1;
    b.mask[5] = 1;
    const DbeResult x = dbe(a, b, 4.0), y = dbe(b, a, 4.0);
    EXPECT_EQ(x.eps_acc, y.eps_comp);
    EXPECT_EQ(x.eps_comp, y.eps_acc);
    EXPECT_LE(x.eps_acc, 4.0);
    EXPECT_LE(x.eps_comp, 4.0);
  }
}

TEST(NonboundaryMask, Cases) {
  EXPECT_EQ(count_set(nonboundary_scale_mask(EdgeMask{Mask(9, 9)})), 81u);
  EXPECT_EQ(count_set(nonboundary_scale_mask(EdgeMask{Mask(9, 9, 1)})), 0u);
  EdgeMask one{Mask(11, 11)};
  one.mask(5, 5) = 1;
  const Mask nb = nonboundary_scale_mask(one);
  EXPECT_EQ(count_set(nb), 121u - 49u);
  EXPECT_EQ(nb(5, 2), 0);
  EXPECT_EQ(nb(5, 1), 1);
  EXPECT_EQ(nb(2, 2), 0);
}

TEST(EvaluatePrediction, IdentityOnAScene) {
  LabelMap seg(16, 16, 0);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) seg(y, x) = 1;
  Field d(16, 16, 10.0);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) d(y, x) = 4.0;
  const DepthMap gt(d);
  const MetricsReport r = evaluate_prediction(gt, gt, seg);
  EXPECT_EQ(r.scale.delta1, 1.0);
  EXPECT_EQ(r.scale.rmse, 0.0);
  EXPECT_TRUE(r.has_boundary);
  EXPECT_EQ(r.prf.recall, 1.0);
  EXPECT_EQ(r.prf.precision, 1.0);
  // Sobel also fires on the diagonal neighbours of the square's corners, which
  // 4-neighbour label boundaries do not contain.
  EXPECT_GT(r.dbe.eps_acc, 0.0);
  EXPECT_LE(r.dbe.eps_acc, 1.0);
  EXPECT_EQ(r.dbe.eps_comp, 0.0);
  EXPECT_EQ(r.see, 0.0);
  const MetricsReport agg = aggregate({r, r});
  EXPECT_EQ(agg.scale.delta1, 1.0);
  EXPECT_EQ(agg.n_valid_pixels, 512u);
}
