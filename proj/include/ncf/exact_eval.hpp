#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ncf/channel.hpp"
#include "ncf/constellation.hpp"
#include "ncf/demodulator.hpp"
#include "ncf/relay_codec.hpp"
#include "ncf/system.hpp"

namespace ncf {

/// Hard quantizer as labeled cells.
///
/// 1-D: interior breakpoints b_1 < ... < b_{M-1} (b_0 = -inf, b_M = +inf)
/// and one label per interval.
/// 2-D: a rectangular lattice; `edges_x`/`edges_y` are interior cell
/// boundaries, outer cells extend to infinity, labels are row-major over
/// (x cell, y cell).
struct QuantizerPartition {
  int dim = 1;
  int K = 1;
  std::vector<double> breakpoints;
  std::vector<int> labels;
  std::vector<double> edges_x;
  std::vector<double> edges_y;

  int label_at(std::span<const double> y) const;
  int interval_count() const { return static_cast<int>(labels.size()); }
  /// Largest number of maximal runs sharing one label (1-D). A value of 2
  /// or more means some index covers non-adjacent intervals.
  int max_runs_per_label() const;
};

using LabelFunction = std::function<int(double)>;

/// Scans `label` on `resolution` lattice points over [lo, hi], merges equal
/// neighbors and bisects every label change to `tolerance`. Labels at the
/// range ends extend to +-infinity.
QuantizerPartition extract_partition(const LabelFunction& label, int K, double lo, double hi, int resolution,
                                     double tolerance = 1e-9);
/// Encoder reading a single coordinate.
QuantizerPartition extract_partition(const EncoderModel& enc, double lo, double hi, int resolution,
                                     double tolerance = 1e-9);
/// Joint-IQ encoder: labels at cell centers of a resolution x resolution lattice.
QuantizerPartition extract_partition_2d(const EncoderModel& enc, double lo, double hi, int resolution);

/// Fraction of points of a lattice `factor` times finer than the extraction
/// lattice on which the partition agrees with `label`, and the largest
/// distance from a disagreeing point to the nearest breakpoint.
struct PartitionFidelity {
  double agreement = 1.0;
  double max_disagreement_distance = 0.0;
};
PartitionFidelity check_partition(const QuantizerPartition& part, const LabelFunction& label, double lo, double hi,
                                  int points);

/// p(u | x) for Y = x + N with per-dimension noise variance `variance_per_dim`.
Eigen::VectorXd cell_probs(const QuantizerPartition& part, std::span<const double> x, double variance_per_dim);

/// Standard normal CDF.
double normal_cdf(double z);

/// Partitions of every quantizer component of one relay.
struct RelayPartition {
  std::vector<QuantizerPartition> components;
  std::vector<int> offsets;  // observation coordinate read by each component
};

struct ExtractionOptions {
  double range_sigmas = 8.0;
  int resolution_1d = 20000;
  int resolution_2d = 1024;
};

RelayPartition extract_relay(const RelayCodec& relay, double power, double noise_variance,
                             const ExtractionOptions& opt = {});

/// Conditional index distributions of one relay, columns indexed by symbol.
struct RelayConditionals {
  std::vector<Eigen::MatrixXd> component;  // K_c x |X|
  Eigen::MatrixXd composite;               // U x |X|
};

RelayConditionals relay_conditionals(const RelayPartition& part, const Constellation& c, double noise_variance);
/// The silent relay: one index with probability one.
RelayConditionals silent_conditionals(const Constellation& c);

struct ExactMetrics {
  double entropy1 = 0.0;
  double entropy2 = 0.0;
  double joint_entropy = 0.0;
  double mutual_information = 0.0;
  double map_ser = 0.0;
  std::vector<int> map_decision;  // per pair u1 * U2 + u2
};

ExactMetrics exact_metrics(const RelayConditionals& r1, const RelayConditionals& r2, const Constellation& c);
ExactMetrics exact_metrics(const RelayPartition& p1, const RelayPartition& p2, const Constellation& c,
                           double variance1, double variance2);

/// Exact operational quantities of the learned models under hard encoding.
struct LearnedExact {
  std::array<double, 2> rate{0.0, 0.0};  // cross-entropy rates under q
  std::vector<double> component_entropy[2];
  std::vector<double> component_rate[2];
  double distortion = 0.0;  // exact D under hard encoding
  double ser = 0.0;         // SER of the learned hard demodulator
};

LearnedExact learned_exact(const SystemModels& models, const std::array<RelayConditionals, 2>& cond,
                           const Constellation& c);

struct McMetrics {
  long samples = 0;
  std::array<double, 2> rate{0.0, 0.0};
  std::array<double, 2> rate_stderr{0.0, 0.0};
  std::array<double, 2> entropy{0.0, 0.0};
  std::array<double, 2> entropy_stderr{0.0, 0.0};
  double distortion = 0.0;
  double distortion_stderr = 0.0;
  double ser = 0.0;
  double ser_stderr = 0.0;
  double map_ser = 0.0;  // only when a decision table is supplied
  double map_ser_stderr = 0.0;
};

/// Monte-Carlo estimates through the networks with hard encoding. Samples
/// are drawn in fixed blocks with per-block substreams of `seed`.
McMetrics mc_metrics(const SystemModels& models, const Constellation& c, const ChannelConfig& cfg, long n,
                     std::uint64_t seed, const std::vector<int>* map_decision = nullptr);

}  // namespace ncf
