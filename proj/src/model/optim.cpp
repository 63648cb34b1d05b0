#include "prk/optim.hpp"

#include <cmath>

#include "prk/errors.hpp"

namespace prk {

double cosine_lr(double base_lr, long step, long total_steps) {
  if (total_steps <= 0) return base_lr;
  const double p = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * p));
}

Adam::Adam(const ParamSet& params, double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.value(i).size(), 0.0);
    v_.emplace_back(params.value(i).size(), 0.0);
  }
}

void Adam::step(ParamSet& params, const std::vector<Tensor>& grads, double lr, const std::vector<bool>& mask) {
  require(grads.size() == params.size() && m_.size() == params.size(), "Adam: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    Tensor& p = params.value(i);
    const Tensor& g = grads[i];
    require(g.size() == p.size(), "Adam: gradient shape mismatch for " + params.name(i));
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!std::isfinite(g[k])) throw NumericalError("non-finite gradient in " + params.name(i));
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

}  // namespace prk
