#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ncf {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter blocks.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const std::size_t> block_sizes);

  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }
  std::uint64_t steps() const { return step_; }
  std::span<const double> first_moment(std::size_t block) const { return m_[block]; }
  std::span<const double> second_moment(std::size_t block) const { return v_[block]; }

  /// Bias-corrected Adam update. Throws DivergenceError on a non-finite
  /// gradient before touching any parameter.
  void step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads);

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

inline void adam_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                      AdamState& state) {
  state.step(params, grads);
}

}  // namespace ncf
