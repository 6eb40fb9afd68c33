#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ncf/demodulator.hpp"
#include "ncf/relay_codec.hpp"
#include "ncf/system.hpp"
#include "ncf/trainer.hpp"

namespace ncf::test {

/// Single affine layer with the given weights (out x in, row-major) and bias.
inline DenseNet affine(int in, int out, std::vector<double> w, std::vector<double> b) {
  DenseLayer l;
  l.weight.resize(out, in);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) l.weight(r, c) = w[r * in + c];
  l.bias = Eigen::Map<Eigen::VectorXd>(b.data(), out);
  return DenseNet({l});
}

/// Nearest-level scalar quantizer: logit_k = 2 a_k y - a_k^2.
inline EncoderModel nearest_level(const std::vector<double>& levels, int offset = 0) {
  std::vector<double> w, b;
  for (double a : levels) {
    w.push_back(2.0 * a);
    b.push_back(-a * a);
  }
  EncoderModel e;
  e.K = static_cast<int>(levels.size());
  e.input_offset = offset;
  e.input_width = 1;
  e.input_scale = 1.0;
  e.net = affine(1, e.K, w, b);
  return e;
}

/// Index 1 for y > 0, else 0 (ties at 0 go to index 0).
inline EncoderModel sign_quantizer(int offset = 0) {
  EncoderModel e;
  e.K = 2;
  e.input_offset = offset;
  e.net = affine(1, 2, {0.0, 1.0}, {0.0, 0.0});
  return e;
}

inline EncoderModel constant_encoder(int K, int offset = 0) {
  EncoderModel e;
  e.K = K;
  e.input_offset = offset;
  e.net = affine(1, K, std::vector<double>(K, 0.0), std::vector<double>(K, 0.0));
  return e;
}

inline RelayCodec relay_of(EncoderModel e) {
  RelayCodec r;
  r.entropy.emplace_back(e.K);
  r.encoders.push_back(std::move(e));
  return r;
}

inline SystemModels system_of(RelayCodec r1, RelayCodec r2, int symbols, std::vector<int> hidden, Rng& rng) {
  SystemModels m;
  m.relays = {std::move(r1), std::move(r2)};
  m.demod = DemodulatorModel::create({m.relays[0].component_sizes(), m.relays[1].component_sizes()}, symbols,
                                     hidden, rng);
  return m;
}

/// Largest relative error between the analytic gradient of the full loss
/// and a five-point central difference over `coords` random parameter
/// coordinates. Relative error is |a - f| / max(|a|, |f|, floor).
inline double loss_fd_error(SystemModels models, const Batch& batch, const LossOptions& opt, int coords,
                            Rng& rng, double h = 1e-4, double floor = 1e-6) {
  auto grad = SystemGradient::zeros_like(models);
  evaluate_loss(models, batch, opt, &grad);
  auto params = parameter_blocks(models, true, true);
  const auto g = gradient_blocks(grad, true, true);
  std::size_t total = 0;
  for (const auto& b : params) total += b.size();
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  double worst = 0.0;
  for (int k = 0; k < coords; ++k) {
    std::size_t i = pick(rng), b = 0;
    while (i >= params[b].size()) i -= params[b++].size();
    const double keep = params[b][i];
    auto at = [&](double d) {
      params[b][i] = keep + d;
      return evaluate_loss(models, batch, opt).total;
    };
    const double fd = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
    params[b][i] = keep;
    const double a = g[b][i];
    worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor}));
  }
  return worst;
}

/// Randomly initialized diamond system for `cfg`, with entropy logits
/// perturbed away from uniform.
inline SystemModels random_system(const TrainConfig& cfg, Rng& rng) {
  auto m = init_distributed(cfg);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (auto& r : m.relays)
    for (auto& e : r.entropy)
      for (Eigen::Index i = 0; i < e.logits.size(); ++i) e.logits[i] = nd(rng);
  return m;
}

}  // namespace ncf::test
