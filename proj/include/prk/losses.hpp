#pragma once

#include <cstdint>
#include <vector>

#include "prk/graph.hpp"
#include "prk/grid.hpp"

namespace prk {

inline constexpr double kDefaultTau = 0.03;

struct LossWeights {
  double lambda1 = 0.1;  // ranking
  double lambda2 = 0.1;  // scale-shift invariant
  double silog_alpha = 10.0;
  double silog_beta = 0.15;
  // Ordinal tolerance, ranking pairs per patch and step, and the share of pairs
  // centred on pseudo-label edges.
  double tau = kDefaultTau;
  int pairs_n = 2048;
  double edge_bias = 0.5;

  void validate() const;
};

// Predictions are [1,H,W] graph values; targets are plain maps.

/// alpha * sqrt(mean(e^2) - beta * mean(e)^2), e = log pred - log gt over `mask`.
Var silog_loss(Var pred, const DepthMap& gt, const Mask& mask, double alpha = 10.0, double beta = 0.15);
double silog_value(const Field& pred, const DepthMap& gt, const Mask& mask, double alpha = 10.0, double beta = 0.15);

/// Ordinal relation of d1 against d2 under tolerance tau: +1 when d1 is
/// farther by a ratio of at least 1 + tau, -1 when nearer, 0 otherwise.
int ordinal_label(double d1, double d2, double tau);

inline constexpr int kPairNeighbourhood = 4;

struct PointPairSet {
  // Flat pixel indices into the map the pairs were sampled from.
  std::vector<std::int32_t> first;
  std::vector<std::int32_t> second;
  std::vector<std::int8_t> labels;
  double tau = kDefaultTau;

  std::size_t size() const { return labels.size(); }
};

/// (1 - edge_bias) of the pairs are uniform; the rest have both endpoints within
/// kPairNeighbourhood pixels of a random pseudo-label depth edge.
PointPairSet sample_pairs(const DepthMap& pseudo, int n, double tau, std::uint64_t seed, double edge_bias = 0.5);

/// Mean over pairs of log(1 + exp(-l (d1 - d2))) for l != 0, (d1 - d2)^2 for l = 0.
Var ranking_loss(Var pred, const PointPairSet& pairs);
double ranking_value(const Field& pred, const PointPairSet& pairs);

struct SsiFit {
  double s = 1.0;
  double t = 0.0;
  bool degenerate = false;
};

inline constexpr double kSsiMinVariance = 1e-12;

/// Least-squares (s, t) minimising sum (s * pred + t - pseudo)^2 over `mask`.
SsiFit ssi_align(const Field& pred, const DepthMap& pseudo, const Mask& mask);

/// mean |s * pred + t - pseudo| with (s, t) from ssi_align held constant for the gradient.
Var ssi_loss(Var pred, const DepthMap& pseudo, const Mask& mask);
double ssi_value(const Field& pred, const DepthMap& pseudo, const Mask& mask);
/// The same loss with a caller-supplied alignment.
Var ssi_loss_with(Var pred, const DepthMap& pseudo, const Mask& mask, const SsiFit& fit);

struct DsdLoss {
  Var total;
  double gt_term = 0.0;
  double rank = 0.0;
  double ssi = 0.0;
  double pl_term = 0.0;  // lambda1 * rank + lambda2 * ssi
};

/// `fixed_fit`, when given, replaces the per-step SSI alignment.
DsdLoss dsd_loss(Var pred, const DepthMap& gt, const Mask& gt_mask, const DepthMap& pseudo, const PointPairSet& pairs,
                 const LossWeights& w, const SsiFit* fixed_fit = nullptr);

}  // namespace prk
