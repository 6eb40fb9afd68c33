#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ncf/common.hpp"
#include "ncf/constellation.hpp"

namespace ncf {

/// sigma^2 = P / 10^(gamma_db / 10).
double snr_db_to_variance(double gamma_db, double power);
double variance_to_snr_db(double variance, double power);

/// Gaussian primitive diamond relay channel Y_i = X + N_i, i = 1, 2, with
/// independent noises. For d = 2 the total noise power sigma_i^2 is split
/// evenly over the two real dimensions.
struct ChannelConfig {
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double power = 1.0;
  int dim = 1;

  static ChannelConfig from_snr_db(double gamma1_db, double gamma2_db, double power, int dim);
  void validate() const;
  double variance(int relay) const { return relay == 0 ? sigma1_sq : sigma2_sq; }
  /// Per-real-dimension noise standard deviation at `relay`.
  double noise_std(int relay) const;
  double snr_db(int relay) const { return variance_to_snr_db(variance(relay), power); }
};

/// Independently seeded noise substreams, one per relay.
struct NoiseStreams {
  Rng relay1;
  Rng relay2;

  static NoiseStreams from_run_seed(std::uint64_t run_seed);
};

/// Draws one channel use: y1 = x + n1, y2 = x + n2.
void sample(std::span<const double> x, const ChannelConfig& cfg, NoiseStreams& noise,
            std::span<double> y1, std::span<double> y2);

/// One training or evaluation batch. Column n of `y[r]` is relay r's
/// observation of symbol `symbols[n]`.
struct Batch {
  std::vector<int> symbols;
  Eigen::MatrixXd y[2];

  int size() const { return static_cast<int>(symbols.size()); }
};

/// Draws `n` uniform symbols from `source` and passes them through the channel.
Batch draw_batch(const Constellation& c, const ChannelConfig& cfg, int n, Rng& source,
                 NoiseStreams& noise);

}  // namespace ncf
