#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ncf/common.hpp"
#include "ncf/constellation.hpp"
#include "ncf/dense_net.hpp"

namespace ncf {

/// How a two-dimensional (IQ) observation is compressed at a relay.
enum class IqMode { none, joint, split };

IqMode parse_iq_mode(std::string_view name);
std::string_view to_string(IqMode m);

/// Learned one-shot quantizer e_theta: observation slice -> K logits.
struct EncoderModel {
  DenseNet net;
  int K = 2;
  int input_offset = 0;  // first observation coordinate read
  int input_width = 1;   // coordinates read
  double input_scale = 1.0;

  static EncoderModel create(int input_offset, int input_width, int K, double input_scale,
                             std::span<const int> hidden, Rng& rng);
  static EncoderModel zeros(int input_offset, int input_width, int K, double input_scale,
                            std::span<const int> hidden);

  /// Slices and standardizes observations (one per column).
  Eigen::MatrixXd features(const Eigen::Ref<const Eigen::MatrixXd>& y) const;
  Eigen::MatrixXd logits(const Eigen::Ref<const Eigen::MatrixXd>& y) const;
};

/// Probability vector over the K indices: softmax(logits / temperature).
Eigen::VectorXd encode_soft(const EncoderModel& enc, std::span<const double> y, double temperature = 1.0);
Eigen::MatrixXd encode_soft_batch(const EncoderModel& enc, const Eigen::Ref<const Eigen::MatrixXd>& y,
                                  double temperature = 1.0);
/// argmax of the logits, ties to the lowest index.
int encode_hard(const EncoderModel& enc, std::span<const double> y);
std::vector<int> encode_hard_batch(const EncoderModel& enc, const Eigen::Ref<const Eigen::MatrixXd>& y);

/// Learned index distribution q_zeta = softmax(logits).
struct EntropyModel {
  Eigen::VectorXd logits;

  EntropyModel() = default;
  explicit EntropyModel(int K) : logits(Eigen::VectorXd::Zero(K)) {}
  int size() const { return static_cast<int>(logits.size()); }
  Eigen::VectorXd probabilities() const;
  /// -log2 q(u) per index.
  Eigen::VectorXd code_lengths() const;
};

/// Cross-entropy rate in bits, averaged over the batch, with the expectation
/// over the soft encoder distribution.
double rate_term(const EncoderModel& enc, const EntropyModel& ent, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                 double temperature = 1.0);
/// Empirical mean of -log2 q(u) under hard encoding.
double rate_term_hard(const EncoderModel& enc, const EntropyModel& ent, const Eigen::Ref<const Eigen::MatrixXd>& batch);

/// All quantizers of one relay. Real constellations and joint-IQ use one
/// encoder; split-IQ uses an in-phase and a quadrature encoder. The relay
/// index is the mixed-radix composite of component indices, first component
/// most significant. The relay rate is the sum of component rates.
struct RelayCodec {
  std::vector<EncoderModel> encoders;
  std::vector<EntropyModel> entropy;

  int composite_size() const;
  /// Width of the concatenated one-hot representation.
  int representation_width() const;
  std::vector<int> component_sizes() const;
  int compose(std::span<const int> components) const;
  std::vector<int> decompose(int composite) const;
  int encode_hard(std::span<const double> y) const;
  std::vector<int> encode_hard_batch(const Eigen::Ref<const Eigen::MatrixXd>& y) const;
};

/// Builds a relay codec for `c`. `sizes` holds K (real / joint-IQ) or
/// {K_I, K_Q} (split-IQ).
RelayCodec make_relay_codec(const Constellation& c, IqMode mode, std::span<const int> sizes, double noise_variance,
                            std::span<const int> hidden, Rng& rng);

}  // namespace ncf
