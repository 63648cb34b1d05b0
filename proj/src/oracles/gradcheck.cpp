#include "prk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"
#include "prk/losses.hpp"
#include "prk/model.hpp"
#include "prk/ops.hpp"
#include "prk/rng.hpp"

namespace prk {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradRelFloor});
}

namespace {

struct Eval {
  double value;
  std::vector<std::uint8_t> branches;
};

Eval evaluate(const std::vector<Tensor>& inputs, const LossBuilder& loss) {
  Graph g;
  g.set_track_branches(true);
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.leaf(t, true));
  const Var l = loss(g, leaves);
  return {l.value().item(), g.branch_signature()};
}

}  // namespace

GradCheckStats check_gradient(const std::vector<Tensor>& inputs, const LossBuilder& loss, double h) {
  Graph g;
  g.set_track_branches(true);
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.leaf(t, true));
  const Var l = loss(g, leaves);
  const std::vector<std::uint8_t> base = g.branch_signature();
  g.backward(l);
  GradCheckStats st;
  std::vector<Tensor> work = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor analytic = g.grad(leaves[i]);
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double x0 = inputs[i][k];
      work[i][k] = x0 + h;
      const Eval plus = evaluate(work, loss);
      work[i][k] = x0 - h;
      const Eval minus = evaluate(work, loss);
      work[i][k] = x0;
      if (plus.branches != base || minus.branches != base) {
        ++st.skipped;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * h);
      st.max_rel_error = std::max(st.max_rel_error, relative_error(analytic[k], numeric));
      ++st.checked;
    }
  }
  return st;
}

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Random linear read-out turns any tensor into a scalar with a dense gradient.
Var project(Graph& g, Var x, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, g.constant(random_tensor(x.shape(), rng))));
}

struct Case {
  std::vector<Tensor> inputs;
  LossBuilder loss;
};

using CaseMaker = std::function<Case(Rng&, std::uint64_t)>;

DepthMap positive_map(int h, int w, Rng& rng, double lo = 0.5, double hi = 3.0) {
  Field f(h, w);
  for (double& v : f.values()) v = rng.uniform(lo, hi);
  return DepthMap(std::move(f));
}

std::vector<std::pair<std::string, CaseMaker>> suite() {
  std::vector<std::pair<std::string, CaseMaker>> s;
  s.emplace_back("conv2d", [](Rng& rng, std::uint64_t ps) {
    const int ci = rng.uniform_int(1, 3), co = rng.uniform_int(1, 3);
    const int k = rng.bernoulli(0.5) ? 3 : 1;
    const int stride = rng.uniform_int(1, 2), pad = rng.uniform_int(0, k / 2);
    const int h = rng.uniform_int(k, 6), w = rng.uniform_int(k, 6);
    return Case{{random_tensor({ci, h, w}, rng), random_tensor({co, ci, k, k}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, conv2d(v[0], v[1], stride, pad), ps); }};
  });
  s.emplace_back("add_channel_bias", [](Rng& rng, std::uint64_t ps) {
    const int c = rng.uniform_int(1, 4);
    return Case{{random_tensor({c, 3, 4}, rng), random_tensor({c}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, add_channel_bias(v[0], v[1]), ps); }};
  });
  s.emplace_back("leaky_relu", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 4, 5}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, leaky_relu(v[0]), ps); }};
  });
  s.emplace_back("softplus", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 4, 5}, rng, -4.0, 4.0)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, softplus(v[0]), ps); }};
  });
  s.emplace_back("bilinear_resample", [](Rng& rng, std::uint64_t ps) {
    const int h = rng.uniform_int(2, 6), w = rng.uniform_int(2, 6);
    NormRoi roi;
    roi.h = rng.uniform(0.2, 1.0);
    roi.w = rng.uniform(0.2, 1.0);
    roi.y0 = rng.uniform(0.0, 1.0 - roi.h);
    roi.x0 = rng.uniform(0.0, 1.0 - roi.w);
    const int oh = rng.uniform_int(1, 7), ow = rng.uniform_int(1, 7);
    return Case{{random_tensor({2, h, w}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, bilinear_resample(v[0], roi, oh, ow), ps); }};
  });
  s.emplace_back("upsample2x", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, rng.uniform_int(1, 4), rng.uniform_int(1, 4)}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, upsample2x(v[0]), ps); }};
  });
  s.emplace_back("concat_channels", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({rng.uniform_int(1, 3), 3, 3}, rng), random_tensor({rng.uniform_int(1, 3), 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, concat_channels(v[0], v[1]), ps); }};
  });
  s.emplace_back("add", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, add(v[0], v[1]), ps); }};
  });
  s.emplace_back("sub", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, sub(v[0], v[1]), ps); }};
  });
  s.emplace_back("mul", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, mul(v[0], v[1]), ps); }};
  });
  s.emplace_back("scale", [](Rng& rng, std::uint64_t ps) {
    const double c = rng.uniform(-2.0, 2.0);
    return Case{{random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, scale(v[0], c), ps); }};
  });
  s.emplace_back("add_scalar", [](Rng& rng, std::uint64_t ps) {
    const double c = rng.uniform(-2.0, 2.0);
    return Case{{random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, add_scalar(v[0], c), ps); }};
  });
  s.emplace_back("square", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, square(v[0]), ps); }};
  });
  s.emplace_back("clamp_min", [](Rng& rng, std::uint64_t ps) {
    const double lo = rng.uniform(-0.5, 0.5);
    return Case{{random_tensor({2, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, clamp_min(v[0], lo), ps); }};
  });
  s.emplace_back("sum", [](Rng& rng, std::uint64_t) {
    return Case{{random_tensor({2, 3, 3}, rng)}, [](Graph&, const std::vector<Var>& v) { return sum(v[0]); }};
  });
  s.emplace_back("mean", [](Rng& rng, std::uint64_t) {
    return Case{{random_tensor({2, 3, 3}, rng)},
                [](Graph&, const std::vector<Var>& v) { return mean(square(v[0])); }};
  });
  s.emplace_back("fuse_features", [](Rng& rng, std::uint64_t ps) {
    const int c = rng.uniform_int(1, 3);
    return Case{{random_tensor({c, 4, 4}, rng), random_tensor({c, 4, 4}, rng), random_tensor({c, 2 * c, 3, 3}, rng),
                 random_tensor({c}, rng)},
                [=](Graph& g, const std::vector<Var>& v) { return project(g, fuse_features(v[0], v[1], v[2], v[3]), ps); }};
  });
  s.emplace_back("conv_stack3", [](Rng& rng, std::uint64_t ps) {
    return Case{{random_tensor({2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3, 3, 3, 3}, rng),
                 random_tensor({1, 3, 3, 3}, rng)},
                [=](Graph& g, const std::vector<Var>& v) {
                  Var x = leaky_relu(conv2d(v[0], v[1], 1, 1));
                  x = leaky_relu(conv2d(x, v[2], 2, 1));
                  return project(g, softplus(conv2d(x, v[3], 1, 1)), ps);
                }};
  });
  s.emplace_back("silog_loss", [](Rng& rng, std::uint64_t) {
    const int h = rng.uniform_int(2, 5), w = rng.uniform_int(2, 5);
    const DepthMap gt = positive_map(h, w, rng);
    Mask m(h, w, 1);
    for (std::size_t i = 1; i < m.size(); ++i) m[i] = rng.bernoulli(0.8);
    const double beta = rng.uniform(0.0, 1.0);
    return Case{{to_tensor(positive_map(h, w, rng).depth)},
                [=](Graph&, const std::vector<Var>& v) { return silog_loss(v[0], gt, m, 10.0, beta); }};
  });
  s.emplace_back("ranking_loss", [](Rng& rng, std::uint64_t ps) {
    const int h = 4, w = 5;
    const DepthMap pseudo = positive_map(h, w, rng);
    const PointPairSet pairs = sample_pairs(pseudo, 16, kDefaultTau, ps, 0.5);
    return Case{{to_tensor(positive_map(h, w, rng).depth)},
                [=](Graph&, const std::vector<Var>& v) { return ranking_loss(v[0], pairs); }};
  });
  s.emplace_back("ssi_loss", [](Rng& rng, std::uint64_t) {
    const int h = 4, w = 5;
    const DepthMap pseudo = positive_map(h, w, rng);
    const Tensor pred = to_tensor(positive_map(h, w, rng).depth);
    // (s, t) are per-step constants, so the check holds them at the base point.
    const SsiFit fit = ssi_align(to_field(pred), pseudo, pseudo.valid);
    return Case{{pred}, [=](Graph&, const std::vector<Var>& v) { return ssi_loss_with(v[0], pseudo, pseudo.valid, fit); }};
  });
  s.emplace_back("dsd_loss", [](Rng& rng, std::uint64_t ps) {
    const int h = 4, w = 5;
    DepthMap gt = positive_map(h, w, rng);
    for (std::size_t i = 1; i < gt.valid.size(); ++i) gt.valid[i] = rng.bernoulli(0.7);
    const DepthMap pseudo = positive_map(h, w, rng);
    const PointPairSet pairs = sample_pairs(pseudo, 16, kDefaultTau, ps, 0.5);
    const Tensor pred = to_tensor(positive_map(h, w, rng).depth);
    const SsiFit fit = ssi_align(to_field(pred), pseudo, pseudo.valid);
    LossWeights wts;
    wts.lambda1 = rng.uniform(0.0, 1.0);
    wts.lambda2 = rng.uniform(0.0, 1.0);
    return Case{{pred}, [=](Graph&, const std::vector<Var>& v) {
                  return dsd_loss(v[0], gt, gt.valid, pseudo, pairs, wts, &fit).total;
                }};
  });
  return s;
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed, int instances) {
  std::vector<GradCheckRow> rows;
  const auto cases = suite();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    GradCheckRow row;
    row.op = cases[c].first;
    row.instances = instances;
    Rng rng(Rng::derive(seed, c));
    for (int i = 0; i < instances; ++i) {
      const Case k = cases[c].second(rng, Rng::derive(seed, 1000 * c + static_cast<std::uint64_t>(i)));
      const GradCheckStats st = check_gradient(k.inputs, k.loss);
      row.stats.max_rel_error = std::max(row.stats.max_rel_error, st.max_rel_error);
      row.stats.checked += st.checked;
      row.stats.skipped += st.skipped;
    }
    row.pass = row.stats.checked > 0 && row.stats.max_rel_error <= kGradTolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace prk
