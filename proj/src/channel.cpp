#include "ncf/channel.hpp"

#include <cmath>
#include <random>

namespace ncf {

double snr_db_to_variance(double gamma_db, double power) {
  if (!std::isfinite(gamma_db) || !std::isfinite(power)) throw ArgumentError("non-finite SNR or power");
  if (!(power > 0.0)) throw ArgumentError("power must be positive");
  return power / std::pow(10.0, gamma_db / 10.0);
}

double variance_to_snr_db(double variance, double power) {
  if (!(variance > 0.0) || !(power > 0.0)) throw ArgumentError("variance and power must be positive");
  return 10.0 * std::log10(power / variance);
}

ChannelConfig ChannelConfig::from_snr_db(double gamma1_db, double gamma2_db, double power, int dim) {
  ChannelConfig cfg;
  cfg.sigma1_sq = snr_db_to_variance(gamma1_db, power);
  cfg.sigma2_sq = snr_db_to_variance(gamma2_db, power);
  cfg.power = power;
  cfg.dim = dim;
  cfg.validate();
  return cfg;
}

void ChannelConfig::validate() const {
  if (!(sigma1_sq > 0.0) || !(sigma2_sq > 0.0) || !(power > 0.0))
    throw ConfigError("channel variances and power must be positive");
  if (dim != 1 && dim != 2) throw ConfigError("channel dimensionality must be 1 or 2");
}

double ChannelConfig::noise_std(int relay) const { return std::sqrt(variance(relay) / dim); }

NoiseStreams NoiseStreams::from_run_seed(std::uint64_t run_seed) {
  return NoiseStreams{make_rng(run_seed, Stream::relay1_noise), make_rng(run_seed, Stream::relay2_noise)};
}

void sample(std::span<const double> x, const ChannelConfig& cfg, NoiseStreams& noise,
            std::span<double> y1, std::span<double> y2) {
  if (static_cast<int>(x.size()) != cfg.dim || y1.size() != x.size() || y2.size() != x.size())
    throw ArgumentError("channel input dimensionality mismatch");
  std::normal_distribution<double> n1(0.0, cfg.noise_std(0));
  std::normal_distribution<double> n2(0.0, cfg.noise_std(1));
  for (std::size_t k = 0; k < x.size(); ++k) y1[k] = x[k] + n1(noise.relay1);
  for (std::size_t k = 0; k < x.size(); ++k) y2[k] = x[k] + n2(noise.relay2);
}

Batch draw_batch(const Constellation& c, const ChannelConfig& cfg, int n, Rng& source,
                 NoiseStreams& noise) {
  if (c.dim() != cfg.dim) throw ArgumentError("constellation and channel dimensionality differ");
  Batch b;
  b.symbols.resize(n);
  b.y[0].resize(cfg.dim, n);
  b.y[1].resize(cfg.dim, n);
  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  for (int i = 0; i < n; ++i) {
    b.symbols[i] = pick(source);
    sample(c.point(b.symbols[i]), cfg, noise, std::span<double>(b.y[0].col(i).data(), cfg.dim),
           std::span<double>(b.y[1].col(i).data(), cfg.dim));
  }
  return b;
}

}  // namespace ncf
