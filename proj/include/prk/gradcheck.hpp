#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prk/graph.hpp"

namespace prk {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradTolerance = 1e-5;
// Denominator floor of the relative error, so near-zero gradients are compared absolutely.
inline constexpr double kGradRelFloor = 1e-3;

/// Builds a scalar loss from graph leaves wrapping `inputs`.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckStats {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Elements whose stencil crossed a kink of a piecewise op.
  std::size_t skipped = 0;
};

/// Analytic gradient vs central differences for every element of every input.
GradCheckStats check_gradient(const std::vector<Tensor>& inputs, const LossBuilder& loss, double h = kFdStep);

double relative_error(double analytic, double numeric);

struct GradCheckRow {
  std::string op;
  int instances = 0;
  GradCheckStats stats;
  bool pass = false;
};

/// Every differentiable op and loss, `instances` random cases each.
std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed, int instances = 20);

}  // namespace prk
