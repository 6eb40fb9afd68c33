#include "ncf/adam.hpp"

#include <cmath>

#include "ncf/common.hpp"

namespace ncf {

AdamState::AdamState(AdamConfig cfg, std::span<const std::size_t> block_sizes) : cfg_(cfg) {
  for (auto n : block_sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void AdamState::step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ArgumentError("Adam block count mismatch");
  for (std::size_t b = 0; b < m_.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size())
      throw ArgumentError("Adam block shape mismatch");
    for (double g : grads[b])
      if (!std::isfinite(g)) throw DivergenceError("non-finite gradient");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t b = 0; b < m_.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    auto p = params[b];
    auto g = grads[b];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      p[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
    }
  }
}

}  // namespace ncf
