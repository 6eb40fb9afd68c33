#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ncf/channel.hpp"
#include "ncf/demodulator.hpp"
#include "ncf/relay_codec.hpp"

namespace ncf {

/// Relay codecs plus the destination demodulator. One relay is the
/// single-relay pretraining system; two relays form the diamond.
struct SystemModels {
  std::vector<RelayCodec> relays;
  DemodulatorModel demod;

  void validate() const;
  bool operator==(const SystemModels& other) const;
};

struct SystemGradient {
  std::vector<std::vector<NetGradient>> encoders;  // [relay][component]
  std::vector<std::vector<Eigen::VectorXd>> entropy;
  NetGradient demod;

  static SystemGradient zeros_like(const SystemModels& models);
  void set_zero();
};

struct LossOptions {
  double lambda = 1.0;
  double temperature = 1.0;
  /// false freezes encoders and entropy models (demodulator-only training).
  bool train_relays = true;
  int chunk = 128;
};

/// Rates and distortion in bits; total = rate[0] + rate[1] + lambda * distortion.
struct LossValue {
  std::array<double, 2> rate{0.0, 0.0};
  double distortion = 0.0;
  double total = 0.0;
};

/// Training objective with the distortion marginalized exactly over the
/// joint categorical latent: for each sample, P(u1, u2 | y1, y2) =
/// P1(u1 | y1) P2(u2 | y2), and the demodulator is evaluated once per
/// composite index pair. Gradients are accumulated into `grad` when given.
LossValue evaluate_loss(const SystemModels& models, const Batch& batch, const LossOptions& opt,
                        SystemGradient* grad = nullptr);

namespace reference {
/// Per-sample serial evaluation of the same objective.
LossValue evaluate_loss(const SystemModels& models, const Batch& batch, const LossOptions& opt,
                        SystemGradient* grad = nullptr);
}  // namespace reference

/// Matching parameter and gradient block lists for the optimizer.
std::vector<std::span<double>> parameter_blocks(SystemModels& models, bool relays, bool demod);
std::vector<std::span<double>> gradient_blocks(SystemGradient& grad, bool relays, bool demod);

}  // namespace ncf
