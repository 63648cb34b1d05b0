#include "prk/losses.hpp"

#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"
#include "prk/metrics.hpp"
#include "prk/rng.hpp"

namespace prk {

namespace {

void check_pred(Var pred, const Grid<double>& like, const char* op) {
  const Shape& s = pred.shape();
  require(s.size() == 3 && s[0] == 1 && s[1] == like.rows() && s[2] == like.cols(),
          std::string(op) + ": prediction " + shape_str(s) + " does not match target " + std::to_string(like.rows()) +
              "x" + std::to_string(like.cols()));
}

double stable_softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

void LossWeights::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
  if (silog_alpha < 0.0 || silog_beta < 0.0) throw ConfigError("silog parameters must be non-negative");
  if (tau < 0.0) throw ConfigError("loss.tau must be non-negative");
  if (pairs_n < 1) throw ConfigError("loss.pairs_n must be at least 1");
  if (edge_bias < 0.0 || edge_bias > 1.0) throw ConfigError("loss.edge_bias must lie in [0, 1]");
}

Var silog_loss(Var pred, const DepthMap& gt, const Mask& mask, double alpha, double beta) {
  check_pred(pred, gt.depth, "silog_loss");
  require(mask.same_shape(gt.depth), "silog_loss: mask shape mismatch");
  const Tensor& p = pred.value();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(i);
  if (idx.empty()) throw ShapeError("silog_loss: empty mask");
  std::vector<double> e(idx.size());
  double m1 = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double pv = p[idx[k]], gv = gt.depth[idx[k]];
    if (!(pv > 0.0) || !(gv > 0.0)) throw NumericalError("silog_loss: non-positive depth under mask");
    e[k] = std::log(pv) - std::log(gv);
    m1 += e[k];
  }
  const double n = static_cast<double>(idx.size());
  m1 /= n;
  // m2 - beta * m1^2 written as var + (1 - beta) m1^2; the centred variance keeps
  // exact scale matches at zero instead of at rounding level.
  double var = 0.0;
  for (double v : e) var += (v - m1) * (v - m1);
  var /= n;
  const double inner = std::max(0.0, var + (1.0 - beta) * m1 * m1);
  const double value = alpha * std::sqrt(inner);
  return pred.graph->record(
      "silog", Tensor::scalar(value), {pred},
      [pred, idx = std::move(idx), e = std::move(e), m1, inner, alpha, beta, n](Graph& g, const Tensor& go) {
        if (inner <= 0.0) return;  // non-differentiable minimum; use the zero subgradient
        Tensor* gp = g.grad_sink(pred);
        const Tensor& p = g.value(pred);
        const double c = go[0] * alpha / (2.0 * std::sqrt(inner));
        for (std::size_t k = 0; k < idx.size(); ++k)
          (*gp)[idx[k]] += c * (2.0 * e[k] / n - 2.0 * beta * m1 / n) / p[idx[k]];
      });
}

int ordinal_label(double d1, double d2, double tau) {
  const double r = d1 / d2;
  if (r >= 1.0 + tau) return 1;
  if (r <= 1.0 / (1.0 + tau)) return -1;
  return 0;
}

PointPairSet sample_pairs(const DepthMap& pseudo, int n, double tau, std::uint64_t seed, double edge_bias) {
  require(n >= 1, "sample_pairs: n must be positive");
  require(edge_bias >= 0.0 && edge_bias <= 1.0, "sample_pairs: edge_bias must lie in [0,1]");
  const int h = pseudo.rows(), w = pseudo.cols();
  require(pseudo.valid_count() > 0, "sample_pairs: pseudo-label map has no valid pixels");
  const EdgeMask edges = depth_edges(pseudo);
  std::vector<std::int32_t> edge_px;
  for (std::size_t i = 0; i < edges.mask.size(); ++i)
    if (edges.mask[i]) edge_px.push_back(static_cast<std::int32_t>(i));

  Rng rng(seed);
  PointPairSet out;
  out.tau = tau;
  out.first.reserve(n);
  out.second.reserve(n);
  out.labels.reserve(n);
  const int n_edge = edge_px.empty() ? 0 : static_cast<int>(std::lround(edge_bias * n));
  auto uniform_px = [&]() {
    for (;;) {
      const int i = rng.uniform_int(0, h * w - 1);
      if (pseudo.valid[static_cast<std::size_t>(i)]) return static_cast<std::int32_t>(i);
    }
  };
  auto near_px = [&](std::int32_t centre) {
    const int cy = centre / w, cx = centre % w;
    for (;;) {
      const int y = std::clamp(cy + rng.uniform_int(-kPairNeighbourhood, kPairNeighbourhood), 0, h - 1);
      const int x = std::clamp(cx + rng.uniform_int(-kPairNeighbourhood, kPairNeighbourhood), 0, w - 1);
      const std::int32_t i = y * w + x;
      if (pseudo.valid[static_cast<std::size_t>(i)]) return i;
    }
  };
  for (int k = 0; k < n; ++k) {
    std::int32_t a, b;
    if (k < n_edge) {
      const std::int32_t c = edge_px[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(edge_px.size()) - 1))];
      a = near_px(c);
      b = near_px(c);
    } else {
      a = uniform_px();
      b = uniform_px();
    }
    out.first.push_back(a);
    out.second.push_back(b);
    out.labels.push_back(static_cast<std::int8_t>(
        ordinal_label(pseudo.depth[static_cast<std::size_t>(a)], pseudo.depth[static_cast<std::size_t>(b)], tau)));
  }
  return out;
}

Var ranking_loss(Var pred, const PointPairSet& pairs) {
  const Tensor& p = pred.value();
  require(pairs.size() > 0, "ranking_loss: no pairs");
  require(pairs.first.size() == pairs.size() && pairs.second.size() == pairs.size(), "ranking_loss: malformed pair set");
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto a = static_cast<std::size_t>(pairs.first[k]), b = static_cast<std::size_t>(pairs.second[k]);
    require(a < p.size() && b < p.size(), "ranking_loss: pair index out of range");
    const double diff = p[a] - p[b];
    const int l = pairs.labels[k];
    total += l == 0 ? diff * diff : stable_softplus(-l * diff);
  }
  const double n = static_cast<double>(pairs.size());
  return pred.graph->record("ranking", Tensor::scalar(total / n), {pred}, [pred, pairs, n](Graph& g, const Tensor& go) {
    Tensor* gp = g.grad_sink(pred);
    const Tensor& p = g.value(pred);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto a = static_cast<std::size_t>(pairs.first[k]), b = static_cast<std::size_t>(pairs.second[k]);
      const double diff = p[a] - p[b];
      const int l = pairs.labels[k];
      const double d = l == 0 ? 2.0 * diff : -l * sigmoid(l * -diff);
      (*gp)[a] += go[0] * d / n;
      (*gp)[b] -= go[0] * d / n;
    }
  });
}

SsiFit ssi_align(const Field& pred, const DepthMap& pseudo, const Mask& mask) {
  require(pred.same_shape(pseudo.depth) && mask.same_shape(pred), "ssi_align: shape mismatch");
  double n = 0.0, sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) n += 1.0, sp += pred[i], sq += pseudo.depth[i];
  if (n < 2.0) throw ShapeError("ssi_align: fewer than 2 valid pixels");
  const double mp = sp / n, mq = sq / n;
  double var = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double dp = pred[i] - mp;
    var += dp * dp;
    cov += dp * (pseudo.depth[i] - mq);
  }
  var /= n;
  cov /= n;
  if (var < kSsiMinVariance) return {1.0, mq - mp, true};
  const double s = cov / var;
  return {s, mq - s * mp, false};
}

Var ssi_loss(Var pred, const DepthMap& pseudo, const Mask& mask) {
  check_pred(pred, pseudo.depth, "ssi_loss");
  return ssi_loss_with(pred, pseudo, mask, ssi_align(to_field(pred.value()), pseudo, mask));
}

Var ssi_loss_with(Var pred, const DepthMap& pseudo, const Mask& mask, const SsiFit& fit) {
  check_pred(pred, pseudo.depth, "ssi_loss");
  require(mask.same_shape(pseudo.depth), "ssi_loss: mask shape mismatch");
  const Field pf = to_field(pred.value());
  std::vector<std::size_t> idx;
  std::vector<double> sign;
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double r = fit.s * pf[i] + fit.t - pseudo.depth[i];
    total += std::abs(r);
    idx.push_back(i);
    sign.push_back(r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
  }
  Graph* g = pred.graph;
  if (g->track_branches()) {
    std::vector<std::uint8_t> bits(sign.size());
    for (std::size_t k = 0; k < sign.size(); ++k) bits[k] = static_cast<std::uint8_t>(sign[k] + 1.0);
    g->append_branches(bits);
  }
  if (idx.empty()) throw ShapeError("ssi_loss: empty mask");
  const double n = static_cast<double>(idx.size());
  return g->record("ssi", Tensor::scalar(total / n), {pred},
                   [pred, idx = std::move(idx), sign = std::move(sign), s = fit.s, n](Graph& g, const Tensor& go) {
                     Tensor* gp = g.grad_sink(pred);
                     for (std::size_t k = 0; k < idx.size(); ++k) (*gp)[idx[k]] += go[0] * s * sign[k] / n;
                   });
}

DsdLoss dsd_loss(Var pred, const DepthMap& gt, const Mask& gt_mask, const DepthMap& pseudo, const PointPairSet& pairs,
                 const LossWeights& w, const SsiFit* fixed_fit) {
  w.validate();
  DsdLoss out;
  const Var gt_term = silog_loss(pred, gt, gt_mask, w.silog_alpha, w.silog_beta);
  out.gt_term = gt_term.value().item();
  if (w.lambda1 == 0.0 && w.lambda2 == 0.0) {
    out.total = gt_term;
    return out;
  }
  const Var rank = ranking_loss(pred, pairs);
  const Var ssi = fixed_fit ? ssi_loss_with(pred, pseudo, pseudo.valid, *fixed_fit) : ssi_loss(pred, pseudo, pseudo.valid);
  out.rank = rank.value().item();
  out.ssi = ssi.value().item();
  out.pl_term = w.lambda1 * out.rank + w.lambda2 * out.ssi;
  const double total = out.gt_term + w.lambda1 * out.rank + w.lambda2 * out.ssi;
  const double l1 = w.lambda1, l2 = w.lambda2;
  out.total = pred.graph->record("dsd", Tensor::scalar(total), {gt_term, rank, ssi},
                                 [gt_term, rank, ssi, l1, l2](Graph& g, const Tensor& go) {
                                   if (Tensor* t = g.grad_sink(gt_term)) (*t)[0] += go[0];
                                   if (Tensor* t = g.grad_sink(rank)) (*t)[0] += l1 * go[0];
                                   if (Tensor* t = g.grad_sink(ssi)) (*t)[0] += l2 * go[0];
                                 });
  return out;
}

double silog_value(const Field& pred, const DepthMap& gt, const Mask& mask, double alpha, double beta) {
  Graph g;
  return silog_loss(g.constant(to_tensor(pred)), gt, mask, alpha, beta).value().item();
}

double ranking_value(const Field& pred, const PointPairSet& pairs) {
  Graph g;
  return ranking_loss(g.constant(to_tensor(pred)), pairs).value().item();
}

double ssi_value(const Field& pred, const DepthMap& pseudo, const Mask& mask) {
  Graph g;
  return ssi_loss(g.constant(to_tensor(pred)), pseudo, mask).value().item();
}

}  // namespace prk
