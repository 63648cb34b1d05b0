#include <gtest/gtest.h>

#include <cmath>

#include "prk/errors.hpp"
#include "prk/losses.hpp"
#include "prk/ops.hpp"
#include "prk/rng.hpp"

using namespace prk;

namespace {

Field row(std::vector<double> v) {
  Field f(1, static_cast<int>(v.size()));
  f.values() = std::move(v);
  return f;
}

DepthMap random_map(int h, int w, Rng& rng, double lo = 0.5, double hi = 20.0) {
  Field f(h, w);
  for (double& v : f.values()) v = rng.uniform(lo, hi);
  return DepthMap(std::move(f));
}

PointPairSet single_pair(int label) {
  PointPairSet p;
  p.first = {0};
  p.second = {1};
  p.labels = {static_cast<std::int8_t>(label)};
  return p;
}

}  // namespace

TEST(Silog, IdentityIsZero) {
  const DepthMap gt(row({1.0, 2.0, 7.0}));
  EXPECT_EQ(silog_value(gt.depth, gt, gt.valid), 0.0);
}

TEST(Silog, FullScaleInvarianceAtBetaOne) {
  Rng rng(1);
  const DepthMap gt = random_map(4, 5, rng), pred = random_map(4, 5, rng);
  Field scaled = pred.depth;
  for (double& v : scaled.values()) v *= 3.7;
  EXPECT_NEAR(silog_value(scaled, gt, gt.valid, 10.0, 1.0), silog_value(pred.depth, gt, gt.valid, 10.0, 1.0), 1e-9);
  const DepthMap g2(row({2.0, 5.0}));
  EXPECT_NEAR(silog_value(row({6.0, 15.0}), g2, g2.valid, 10.0, 1.0), 0.0, 1e-9);
}

TEST(Silog, HandEvaluation) {
  const DepthMap gt(row({1.0, 1.0}));
  EXPECT_NEAR(silog_value(row({1.0, 4.0}), gt, gt.valid, 10.0, 0.15), 9.427820934599216, 1e-12);
}

TEST(Silog, RejectsBadInput) {
  const DepthMap gt(row({1.0, 1.0}));
  EXPECT_THROW(silog_value(row({1.0, 2.0}), gt, Mask(1, 2, 0)), ShapeError);
  EXPECT_THROW(silog_value(row({1.0, -2.0}), gt, gt.valid), NumericalError);
}

TEST(Silog, IgnoresPixelsOutsideMask) {
  DepthMap gt(row({1.0, 2.0, 3.0}));
  gt.valid[1] = 0;
  const Field pred = row({1.5, 2.5, 2.0});
  const double a = silog_value(pred, gt, gt.valid);
  gt.depth[1] = 1000.0;
  EXPECT_EQ(silog_value(pred, gt, gt.valid), a);
}

TEST(OrdinalLabel, ToleranceTable) {
  EXPECT_EQ(ordinal_label(1.05, 1.0, 0.03), 1);
  EXPECT_EQ(ordinal_label(1.02, 1.0, 0.03), 0);
  EXPECT_EQ(ordinal_label(0.95, 1.0, 0.03), -1);
}

TEST(SamplePairs, ConstantMapGivesTies) {
  const DepthMap pseudo(Field(8, 8, 3.0));
  const PointPairSet p = sample_pairs(pseudo, 100, 0.03, 5, 0.5);
  ASSERT_EQ(p.size(), 100u);
  for (auto l : p.labels) EXPECT_EQ(l, 0);
}

TEST(SamplePairs, DeterministicAndConsistent) {
  Rng rng(2);
  const DepthMap pseudo = random_map(10, 12, rng);
  const PointPairSet a = sample_pairs(pseudo, 300, 0.03, 77, 0.5), b = sample_pairs(pseudo, 300, 0.03, 77, 0.5);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(pseudo.valid[static_cast<std::size_t>(a.first[k])]);
    EXPECT_EQ(a.labels[k], ordinal_label(pseudo.depth[static_cast<std::size_t>(a.first[k])],
                                         pseudo.depth[static_cast<std::size_t>(a.second[k])], a.tau));
  }
}

TEST(SamplePairs, EdgeBiasedPairsStayNearEdges) {
  Field f(20, 20, 2.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 10; x < 20; ++x) f(y, x) = 8.0;
  const PointPairSet p = sample_pairs(DepthMap(f), 200, 0.03, 3, 1.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    EXPECT_LE(std::abs(p.first[k] % 20 - 9.5), 4.5 + 1e-9);
    EXPECT_LE(std::abs(p.first[k] % 20 - p.second[k] % 20), 9);
  }
}

TEST(SamplePairs, LabelsInvariantUnderPseudoScaling) {
  Rng rng(4);
  const DepthMap pseudo = random_map(9, 9, rng);
  DepthMap scaled = pseudo;
  for (double& v : scaled.depth.values()) v *= 2.5;
  const PointPairSet a = sample_pairs(pseudo, 200, 0.03, 8, 0.0), b = sample_pairs(scaled, 200, 0.03, 8, 0.0);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Ranking, HandValues) {
  EXPECT_EQ(ranking_value(row({2.0, 2.0}), single_pair(0)), 0.0);
  EXPECT_NEAR(ranking_value(row({2.0, 2.0}), single_pair(1)), 0.6931471805599453, 1e-15);
  EXPECT_LE(ranking_value(row({31.0, 1.0}), single_pair(1)), 1e-12);
  const double big = ranking_value(row({1.0, 1001.0}), single_pair(1));
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 1000.0, 1e-9);
}

TEST(SsiAlign, Cases) {
  const SsiFit a = ssi_align(row({1, 2, 3}), DepthMap(row({3, 5, 7})), Mask(1, 3, 1));
  EXPECT_NEAR(a.s, 2.0, 1e-12);
  EXPECT_NEAR(a.t, 1.0, 1e-12);
  EXPECT_FALSE(a.degenerate);
  const SsiFit b = ssi_align(row({1, 2, 3}), DepthMap(row({1, 2, 3})), Mask(1, 3, 1));
  EXPECT_NEAR(b.s, 1.0, 1e-12);
  EXPECT_NEAR(b.t, 0.0, 1e-12);
  const SsiFit c = ssi_align(row({2, 2, 2}), DepthMap(row({3, 5, 7})), Mask(1, 3, 1));
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.s, 1.0);
  EXPECT_DOUBLE_EQ(c.t, 3.0);
  EXPECT_THROW(ssi_align(row({1, 2}), DepthMap(row({1, 2})), Mask(1, 2, 0)), ShapeError);
}

TEST(SsiLoss, Cases) {
  const Mask all2(1, 2, 1), all3(1, 3, 1);
  EXPECT_NEAR(ssi_value(row({1, 2}), DepthMap(row({2, 5})), all2), 0.0, 1e-15);
  EXPECT_NEAR(ssi_value(row({1, 2, 3}), DepthMap(row({2, 5, 7})), all3), 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(ssi_value(row({1, 2, 3}), DepthMap(row({4.5, 6.0, 7.5})), all3), 0.0, 1e-12);
}

TEST(SsiLoss, AffineInvariance) {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const DepthMap pseudo = random_map(5, 6, rng), pred = random_map(5, 6, rng);
    Field moved = pred.depth;
    const double c = rng.uniform(0.1, 10.0), off = rng.uniform(-5.0, 5.0);
    for (double& v : moved.values()) v = c * v + off;
    EXPECT_NEAR(ssi_value(moved, pseudo, pseudo.valid), ssi_value(pred.depth, pseudo, pseudo.valid), 1e-9);
  }
}

TEST(DsdLoss, ReducesToSilog) {
  Rng rng(6);
  const DepthMap gt = random_map(5, 5, rng), pseudo = random_map(5, 5, rng), pred = random_map(5, 5, rng);
  const PointPairSet pairs = sample_pairs(pseudo, 64, 0.03, 1, 0.5);
  LossWeights w;
  w.lambda1 = w.lambda2 = 0.0;
  Graph g;
  const DsdLoss l = dsd_loss(g.constant(to_tensor(pred.depth)), gt, gt.valid, pseudo, pairs, w);
  EXPECT_EQ(l.total.value().item(), silog_value(pred.depth, gt, gt.valid));
}

TEST(DsdLoss, DefaultsAndRecomposition) {
  const LossWeights d;
  EXPECT_EQ(d.lambda1, 0.1);
  EXPECT_EQ(d.lambda2, 0.1);
  Rng rng(7);
  for (int k = 0; k < 10; ++k) {
    DepthMap gt = random_map(6, 6, rng);
    for (std::size_t i = 2; i < gt.valid.size(); ++i) gt.valid[i] = rng.bernoulli(0.6);
    const DepthMap pseudo = random_map(6, 6, rng), pred = random_map(6, 6, rng);
    const PointPairSet pairs = sample_pairs(pseudo, 64, 0.03, static_cast<std::uint64_t>(k), 0.5);
    Graph g;
    const DsdLoss l = dsd_loss(g.constant(to_tensor(pred.depth)), gt, gt.valid, pseudo, pairs, d);
    EXPECT_NEAR(l.total.value().item(), l.gt_term + 0.1 * l.rank + 0.1 * l.ssi, 1e-12);
    EXPECT_NEAR(l.pl_term, 0.1 * l.rank + 0.1 * l.ssi, 1e-12);
    EXPECT_GE(l.gt_term, 0.0);
    EXPECT_GE(l.rank, 0.0);
    EXPECT_GE(l.ssi, 0.0);
  }
}

TEST(DsdLoss, RejectsNegativeWeights) {
  const DepthMap m(row({1, 2}));
  LossWeights w;
  w.lambda1 = -0.1;
  Graph g;
  EXPECT_THROW(dsd_loss(g.constant(to_tensor(m.depth)), m, m.valid, m, single_pair(0), w), ConfigError);
}

TEST(LossGradients, GradientFlowsThroughDsd) {
  Rng rng(8);
  const DepthMap gt = random_map(4, 4, rng), pseudo = random_map(4, 4, rng);
  const PointPairSet pairs = sample_pairs(pseudo, 32, 0.03, 2, 0.5);
  Graph g;
  const Var p = g.leaf(to_tensor(random_map(4, 4, rng).depth));
  g.backward(dsd_loss(p, gt, gt.valid, pseudo, pairs, LossWeights{}).total);
  const Tensor gp = g.grad(p);
  double n = 0.0;
  for (double v : gp.data()) n += std::abs(v);
  EXPECT_GT(n, 0.0);
}
