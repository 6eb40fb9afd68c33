#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ncf/adam.hpp"
#include "ncf/channel.hpp"
#include "ncf/constellation.hpp"
#include "ncf/exact_eval.hpp"
#include "ncf/relay_codec.hpp"
#include "ncf/system.hpp"

namespace ncf {

enum class Scheme { distributed, p2p };

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme s);

struct TrainConfig {
  Scheme scheme = Scheme::distributed;
  Modulation modulation = Modulation::pam4;
  IqMode iq_mode = IqMode::none;
  double power = 1.0;
  double snr1_db = 10.0;
  double snr2_db = 10.0;
  double lambda = 1.0;
  /// Per-relay alphabet sizes: {K} for real / joint-IQ, {K_I, K_Q} for split-IQ.
  std::vector<int> K1{16};
  std::vector<int> K2{16};
  std::vector<int> hidden{128, 256, 64};
  int batch_size = 512;
  int steps = 30000;
  /// p2p demodulator fine-tuning steps; 0 means `steps`.
  int finetune_steps = 0;
  AdamConfig adam;
  double tau_start = 1.0;
  double tau_end = 0.07;
  /// Multiplies the encoders' output layer at initialization. Below 1 the
  /// initial index distributions are close to uniform for every y.
  double encoder_gain = 1.0;
  std::uint64_t seed = 1;
  int chunk = 128;

  long mc_samples = 100000;
  ExtractionOptions extraction;

  void validate() const;
  Constellation constellation() const;
  ChannelConfig channel() const;
  /// Geometric tau_start -> tau_end schedule.
  double temperature(int step, int total) const;
};

struct RunMetrics {
  double rate1 = 0.0;  // exact cross-entropy rate of relay 1 under q
  double rate2 = 0.0;
  double rate = 0.0;   // (rate1 + rate2) / 2
  double distortion = 0.0;
  double mi_lower_bound = 0.0;
  double mi_exact = 0.0;
  double ser_mc = 0.0;
  double ser_mc_stderr = 0.0;
  double ser_map_exact = 0.0;
  double ser_demod_exact = 0.0;
  double entropy1 = 0.0;
  double entropy2 = 0.0;
  double joint_entropy = 0.0;
  double loss_exact = 0.0;
  double mi_two_obs = 0.0;
  double cut_set = 0.0;
  double baseline_mi = 0.0;
  // Monte-Carlo cross-checks.
  double rate1_mc = 0.0;
  double rate2_mc = 0.0;
  double distortion_mc = 0.0;
  double distortion_mc_stderr = 0.0;
  double soft_hard_rate_gap = 0.0;
  // Training-loss trend, window-100 moving averages.
  double loss_start = 0.0;
  double loss_end = 0.0;
};

struct RunRecord {
  TrainConfig config;
  SystemModels models;
  /// p2p only: the phase-1 single-relay system before replication.
  std::optional<SystemModels> pretrained;
  RunMetrics metrics;
  std::vector<double> loss_trace;  // total loss per step
  double wall_seconds = 0.0;
  bool failed = false;
  std::string diagnostic;
  bool degenerate = false;          // below the single-quantizer baseline
  bool soft_hard_mismatch = false;  // |soft rate - hard rate| > 0.05 bits
  bool selected = true;             // best restart of its lambda
  bool on_hull = false;
  int restart = 0;
};

/// Initial models for `cfg` (distributed layout; p2p phase 1 uses a single relay).
SystemModels init_distributed(const TrainConfig& cfg);

/// Adam over `steps` fresh batches. Records the total loss per step.
void optimize(SystemModels& models, const TrainConfig& cfg, int steps, bool train_relays, Rng& source,
              NoiseStreams& noise, std::vector<double>& history);

/// Exact, Monte-Carlo and bound metrics for trained models.
RunMetrics evaluate_run(const SystemModels& models, const TrainConfig& cfg);

RunRecord train_distributed(const TrainConfig& cfg);
/// Phase 1: single relay + single-relay demodulator at relay-1 SNR.
/// Phase 2: encoder and entropy model copied to both relays and frozen; a
/// fresh two-relay demodulator is trained.
RunRecord train_p2p(const TrainConfig& cfg);
/// Phase 1 of train_p2p alone, reported as a single-relay system.
RunRecord train_single_relay(const TrainConfig& cfg);
RunRecord train(const TrainConfig& cfg);

/// Upper concave hull of (rate, mi) points restricted to its nondecreasing
/// part. Returns point indices in increasing rate order.
std::vector<std::size_t> upper_hull(const std::vector<std::pair<double, double>>& points);
/// Piecewise-linear interpolation on a hull; nullopt outside its rate span.
std::optional<double> interpolate(const std::vector<std::pair<double, double>>& hull, double rate);

struct SweepOptions {
  int restarts = 3;
  int workers = 1;
  std::uint64_t master_seed = 1;
  /// Distinguishes sweeps that share a master seed (scheme variants).
  std::uint64_t variant = 0;
};

/// Seed of (lambda index, restart) within a sweep.
std::uint64_t derived_seed(const SweepOptions& opt, std::size_t lambda_index, int restart);

/// Trains every config `restarts` times with derived seeds, selects the
/// restart with the lowest exact loss per config, flags hull points and
/// returns all records sorted by achieved rate (failed runs last).
std::vector<RunRecord> sweep(const std::vector<TrainConfig>& cfgs, const SweepOptions& opt);

/// Marks hull membership among selected, non-failed records.
void mark_hull(std::vector<RunRecord>& records);

/// Number of adjacent lambda pairs whose achieved rate decreases along the
/// hull (monitoring only).
int rate_monotonicity_violations(const std::vector<RunRecord>& records);

}  // namespace ncf
