#pragma once

#include <vector>

#include "prk/model.hpp"

namespace prk {

/// Cosine decay from base_lr to 0 over total_steps.
double cosine_lr(double base_lr, long step, long total_steps);

class Adam {
 public:
  explicit Adam(const ParamSet& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Updates the parameters whose `mask` entry is true (all when mask is empty).
  void step(ParamSet& params, const std::vector<Tensor>& grads, double lr, const std::vector<bool>& mask = {});
  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace prk
