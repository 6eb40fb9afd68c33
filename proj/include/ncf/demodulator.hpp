#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ncf/common.hpp"
#include "ncf/dense_net.hpp"

namespace ncf {

/// Destination network p_phi: concatenated index representations of the
/// relays -> |X| logits. The input of relay r is the concatenation of one
/// one-hot (or soft) vector per quantizer component of that relay.
///
/// A demodulator may serve one relay (single-relay pretraining) or two.
struct DemodulatorModel {
  DenseNet net;
  std::vector<std::vector<int>> relay_components;  // component K's per relay
  int num_symbols = 2;

  static DemodulatorModel create(std::vector<std::vector<int>> relay_components, int num_symbols,
                                 std::span<const int> hidden, Rng& rng);
  static DemodulatorModel zeros(std::vector<std::vector<int>> relay_components, int num_symbols,
                                std::span<const int> hidden);

  int relay_count() const { return static_cast<int>(relay_components.size()); }
  /// Number of composite indices of relay r (1 for an absent second relay).
  int composite_size(int relay) const;
  int representation_width(int relay) const;
  int input_width() const { return net.input_width(); }
  /// Number of (u1, u2) composite pairs; pair index m = u1 * U2 + u2.
  int pair_count() const { return composite_size(0) * composite_size(1); }

  /// One-hot representation of composite index u at relay r.
  Eigen::VectorXd one_hot(int relay, int u) const;
  /// Network input for the pair (u1, u2).
  Eigen::VectorXd pair_input(int u1, int u2) const;
  /// All pair inputs, one per column, in pair order.
  Eigen::MatrixXd all_pair_inputs() const;
  SparseInput all_pair_inputs_sparse() const;
};

/// Distribution over symbols for arbitrary (one-hot or soft) relay
/// representations. `r2` must be empty for a single-relay demodulator.
Eigen::VectorXd demod_soft(const DemodulatorModel& dem, std::span<const double> r1, std::span<const double> r2);
/// Hard decision on composite indices; ties to the lowest symbol index.
int demod_hard(const DemodulatorModel& dem, int u1, int u2);

/// Demodulator outputs tabulated over every composite index pair.
struct PairTable {
  int u1_size = 1;
  int u2_size = 1;
  Eigen::MatrixXd logits;      // |X| x pairs
  Eigen::MatrixXd probability;  // |X| x pairs
  Eigen::MatrixXd code_length;  // -log2 p(w | u1, u2), |X| x pairs
  std::vector<int> decision;    // argmax per pair

  int pair(int u1, int u2) const { return u1 * u2_size + u2; }
};

PairTable pair_table(const DemodulatorModel& dem);

/// D = mean_n sum_{u1,u2} P1(u1|n) P2(u2|n) (-log2 p(w_n|u1,u2)) in bits.
/// `p1` is U1 x N, `p2` is U2 x N (a 1 x N row of ones for a single relay).
double distortion(const PairTable& table, const Eigen::Ref<const Eigen::MatrixXd>& p1,
                  const Eigen::Ref<const Eigen::MatrixXd>& p2, std::span<const int> symbols);
double distortion(const DemodulatorModel& dem, const Eigen::Ref<const Eigen::MatrixXd>& p1,
                  const Eigen::Ref<const Eigen::MatrixXd>& p2, std::span<const int> symbols);

}  // namespace ncf
