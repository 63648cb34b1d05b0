#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prk/losses.hpp"
#include "prk/metrics.hpp"

namespace prk {

/// Distance to the nearest set pixel by exhaustive search.
Field edt_brute_force(const Mask& mask);

/// Precision/recall/F1 by scanning every pixel pair.
PrfResult edge_prf_brute_force(const EdgeMask& pred, const EdgeMask& gt, int tol);

/// (s, t) from the raw 2x2 normal equations, solved by Cramer's rule.
SsiFit ssi_normal_equations(const Field& pred, const DepthMap& pseudo, const Mask& mask);

/// (s, t) by refining grid search on the squared residual.
SsiFit ssi_grid_search(const Field& pred, const DepthMap& pseudo, const Mask& mask);

struct OracleRow {
  std::string name;
  int cases = 0;
  int failures = 0;
  double max_error = 0.0;
  bool pass = false;
};

/// EDT vs brute force on 1000 masks, ssi_align vs normal equations and grid
/// search, edge P/R/F1 vs brute force on 100 mask pairs.
std::vector<OracleRow> run_oracle_suite(std::uint64_t seed);

}  // namespace prk
