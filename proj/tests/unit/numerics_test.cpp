#include <gtest/gtest.h>

#include <cmath>

#include "prk/errors.hpp"
#include "prk/gradcheck.hpp"
#include "prk/graph.hpp"
#include "prk/ops.hpp"
#include "prk/parallel.hpp"
#include "prk/rng.hpp"

using namespace prk;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(s));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  t.enable_grad();
  EXPECT_EQ(t.grad().size(), 6u);
}

TEST(Conv2d, OneByOneKernelScales) {
  Graph g;
  const Tensor x = random_tensor({1, 3, 4}, 1);
  const Var y = conv2d(g.constant(x), g.constant(Tensor({1, 1, 1, 1}, 2.0)), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 4}));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.value()[i], 2.0 * x[i]);
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Graph g;
  const Tensor x = random_tensor({2, 5, 4}, 2);
  Tensor k({2, 2, 3, 3}, 0.0);
  k[(0 * 2 + 0) * 9 + 4] = 1.0;
  k[(1 * 2 + 1) * 9 + 4] = 1.0;
  const Var y = conv2d(g.constant(x), g.constant(k), 1, 1);
  EXPECT_EQ(y.value(), x);
}

TEST(Conv2d, AllOnesSumsReceptiveField) {
  Graph g;
  const Var y = conv2d(g.constant(Tensor({1, 3, 3}, 1.0)), g.constant(Tensor({1, 1, 3, 3}, 1.0)), 1, 0);
  ASSERT_EQ(y.value().size(), 1u);
  EXPECT_EQ(y.value()[0], 9.0);
}

TEST(Conv2d, OutputSizeFormula) {
  Graph g;
  const Var y = conv2d(g.constant(Tensor({1, 7, 8})), g.constant(Tensor({4, 1, 3, 3})), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{4, 4, 4}));
}

TEST(Conv2d, RejectsChannelMismatch) {
  Graph g;
  EXPECT_THROW(conv2d(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({1, 3, 3, 3})), 1, 1), ShapeError);
  EXPECT_THROW(conv2d(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({1, 2, 2, 2})), 1, 1), ShapeError);
}

TEST(BilinearResample, FullRoiSameSizeIsIdentity) {
  Graph g;
  const Tensor x = random_tensor({2, 5, 7}, 3);
  EXPECT_EQ(bilinear_resample(g.constant(x), NormRoi::full(), 5, 7).value(), x);
}

TEST(BilinearResample, ConstantStaysConstant) {
  Graph g;
  const Var y = bilinear_resample(g.constant(Tensor({1, 4, 6}, 2.5)), {0.1, 0.3, 0.7, 0.5}, 9, 5);
  for (double v : y.value().data()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(BilinearResample, TwoByTwoToThreeByThreeCentre) {
  Graph g;
  const Var y = bilinear_resample(g.constant(Tensor({1, 2, 2}, {0, 1, 2, 3})), NormRoi::full(), 3, 3);
  EXPECT_DOUBLE_EQ(y.value().at(0, 1, 1), 1.5);
}

TEST(BilinearResample, RejectsRoiOutsideUnitSquare) {
  Graph g;
  const Var x = g.constant(Tensor({1, 4, 4}));
  EXPECT_THROW(bilinear_resample(x, {0.5, 0.0, 0.6, 1.0}, 2, 2), ShapeError);
  EXPECT_THROW(bilinear_resample(x, {-0.1, 0.0, 0.5, 0.5}, 2, 2), ShapeError);
  EXPECT_THROW(bilinear_resample(x, NormRoi::full(), 0, 2), ShapeError);
}

TEST(BilinearResample, PixelAlignedRoiIsSubarray) {
  Graph g;
  const Tensor x = random_tensor({1, 8, 12}, 4);
  const PatchRoi r{2, 3, 4, 6};
  const Var y = bilinear_resample(g.constant(x), NormRoi::from_patch(r, 8, 12), 4, 6);
  for (int yy = 0; yy < 4; ++yy)
    for (int xx = 0; xx < 6; ++xx) EXPECT_EQ(y.value().at(0, yy, xx), x.at(0, r.row + yy, r.col + xx));
}

TEST(ConcatChannels, EmptyIsNeutral) {
  Graph g;
  const Tensor x = random_tensor({2, 3, 3}, 5);
  EXPECT_EQ(concat_channels(g.constant(x), g.constant(Tensor({0, 3, 3}))).value(), x);
}

TEST(ConcatChannels, ShapeArithmeticAndMismatch) {
  Graph g;
  EXPECT_EQ(concat_channels(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({3, 4, 4}))).shape(), (Shape{5, 4, 4}));
  EXPECT_THROW(concat_channels(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({3, 4, 5}))), ShapeError);
}

TEST(ConcatChannels, GradientOfSumIsOnes) {
  Graph g;
  const Var a = g.leaf(random_tensor({2, 3, 3}, 6));
  const Var b = g.leaf(random_tensor({1, 3, 3}, 7));
  g.backward(sum(concat_channels(a, b)));
  const Tensor ga = g.grad(a);
  ASSERT_EQ(ga.shape(), (Shape{2, 3, 3}));
  for (double v : ga.data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  const Var x = g.leaf(random_tensor({4}, 8));
  g.backward(sum(x));
  const Tensor gx = g.grad(x);
  for (double v : gx.data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, MeanOfSquares) {
  Graph g;
  const Var x = g.leaf(Tensor({2}, {1.0, 2.0}));
  g.backward(mean(square(x)));
  const Tensor gx = g.grad(x);
  EXPECT_DOUBLE_EQ(gx[0], 1.0);
  EXPECT_DOUBLE_EQ(gx[1], 2.0);
}

TEST(Backward, RejectsNonScalarLossAndReuse) {
  Graph g;
  const Var x = g.leaf(Tensor({3}, 1.0));
  EXPECT_THROW(g.backward(square(x)), ShapeError);
  const Var l = sum(x);
  g.backward(l);
  EXPECT_THROW(g.backward(l), ShapeError);
}

TEST(Backward, FrozenLeafGetsNoGradient) {
  Graph g;
  const Var x = g.leaf(Tensor({3}, 1.0), false);
  const Var y = g.leaf(Tensor({3}, 2.0), true);
  g.backward(sum(mul(x, y)));
  const Tensor gx = g.grad(x), gy = g.grad(y);
  for (double v : gx.data()) EXPECT_EQ(v, 0.0);
  for (double v : gy.data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, TopologicalOrderOfInputs) {
  Graph g;
  const Var x = g.leaf(Tensor({2}, 1.0));
  const Var y = add(square(x), scale(x, 3.0));
  for (int id : g.inputs(y)) EXPECT_LT(id, y.id);
}

TEST(Backward, ThreeLayerConvStackMatchesFiniteDifferences) {
  const std::vector<Tensor> in{random_tensor({2, 6, 6}, 9), random_tensor({3, 2, 3, 3}, 10),
                               random_tensor({3, 3, 3, 3}, 11), random_tensor({1, 3, 3, 3}, 12)};
  const Tensor w = random_tensor({1, 3, 3}, 13);
  const GradCheckStats st = check_gradient(in, [&](Graph& g, const std::vector<Var>& v) {
    Var x = leaky_relu(conv2d(v[0], v[1], 1, 1));
    x = leaky_relu(conv2d(x, v[2], 2, 1));
    return sum(mul(softplus(conv2d(x, v[3], 1, 1)), g.constant(w)));
  });
  EXPECT_GT(st.checked, 0u);
  EXPECT_LE(st.max_rel_error, kGradTolerance);
}

TEST(Backward, LinearInLossCombination) {
  const Tensor x0 = random_tensor({2, 5, 5}, 14), k0 = random_tensor({2, 2, 3, 3}, 15);
  const double a = 0.7, b = -1.9;
  auto grads = [&](int which) {
    Graph g;
    const Var x = g.leaf(x0), k = g.leaf(k0);
    const Var y = leaky_relu(conv2d(x, k, 1, 1));
    const Var l1 = sum(square(y)), l2 = mean(softplus(y));
    const Var l = which == 1 ? l1 : which == 2 ? l2 : add(scale(l1, a), scale(l2, b));
    g.backward(l);
    return std::pair{g.grad(x), g.grad(k)};
  };
  const auto g1 = grads(1), g2 = grads(2), gc = grads(3);
  for (std::size_t i = 0; i < x0.size(); ++i)
    EXPECT_NEAR(gc.first[i], a * g1.first[i] + b * g2.first[i], 1e-12);
  for (std::size_t i = 0; i < k0.size(); ++i)
    EXPECT_NEAR(gc.second[i], a * g1.second[i] + b * g2.second[i], 1e-12);
}

TEST(Backward, DeterministicAcrossRuns) {
  auto run = [] {
    Graph g;
    const Var x = g.leaf(random_tensor({3, 6, 6}, 16)), k = g.leaf(random_tensor({4, 3, 3, 3}, 17));
    const Var y = bilinear_resample(leaky_relu(conv2d(x, k, 2, 1)), {0.1, 0.2, 0.6, 0.7}, 5, 4);
    g.backward(sum(square(y)));
    return std::pair{y.value(), g.grad(k)};
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Forward, FiniteOutputsOnFiniteInputs) {
  Graph g;
  const Var x = g.constant(random_tensor({3, 8, 8}, 18));
  const Var y = softplus(conv2d(upsample2x(x), g.constant(random_tensor({2, 3, 3, 3}, 19)), 1, 1));
  EXPECT_TRUE(y.value().all_finite());
}

TEST(Parallel, RunsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 3) throw NumericalError("boom");
               }),
               NumericalError);
}

TEST(Grid, DilateAndBlurHelpers) {
  Mask m(7, 7);
  m(3, 3) = 1;
  EXPECT_EQ(count_set(dilate_square(m, 1)), 9u);
  EXPECT_EQ(count_set(dilate_square(m, 0)), 1u);
  Field f(5, 5, 0.0);
  f(2, 2) = 1.0;
  const Field b = gaussian_blur(f, 3, 1.0);
  double s = 0.0;
  for (double v : b.values()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(b(0, 0), 0.0);
}

TEST(Grid, DownsampleAreaAverages) {
  const Tensor t({1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor d = downsample_area(t, 2);
  ASSERT_EQ(d.shape(), (Shape{1, 1, 2}));
  EXPECT_DOUBLE_EQ(d[0], 3.5);
  EXPECT_DOUBLE_EQ(d[1], 5.5);
}
