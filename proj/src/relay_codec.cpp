#include "ncf/relay_codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "ncf/prob.hpp"

namespace ncf {

namespace {

std::vector<int> encoder_widths(int input_width, int K, std::span<const int> hidden) {
  std::vector<int> widths{input_width};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(K);
  return widths;
}

void check_encoder_shape(int input_offset, int input_width, int K, double input_scale) {
  // K = 1 is a silent relay (constant index); kept for degenerate-limit runs.
  if (K < 1) throw ConfigError("encoder alphabet size must be at least 1");
  if (input_offset < 0 || input_width < 1 || input_offset + input_width > 2)
    throw ConfigError("encoder must read a slice of a 1-D or 2-D observation");
  if (!(input_scale > 0.0)) throw ConfigError("encoder input scale must be positive");
}

}  // namespace

IqMode parse_iq_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "none" || lower.empty()) return IqMode::none;
  if (lower == "joint") return IqMode::joint;
  if (lower == "split") return IqMode::split;
  throw ConfigError("unknown iq_mode '" + std::string(name) + "'");
}

std::string_view to_string(IqMode m) {
  switch (m) {
    case IqMode::none: return "none";
    case IqMode::joint: return "joint";
    case IqMode::split: return "split";
  }
  return "none";
}

EncoderModel EncoderModel::create(int input_offset, int input_width, int K, double input_scale,
                                  std::span<const int> hidden, Rng& rng) {
  check_encoder_shape(input_offset, input_width, K, input_scale);
  const auto widths = encoder_widths(input_width, K, hidden);
  return EncoderModel{DenseNet::he_init(widths, rng), K, input_offset, input_width, input_scale};
}

EncoderModel EncoderModel::zeros(int input_offset, int input_width, int K, double input_scale,
                                 std::span<const int> hidden) {
  check_encoder_shape(input_offset, input_width, K, input_scale);
  const auto widths = encoder_widths(input_width, K, hidden);
  return EncoderModel{DenseNet::zeros(widths), K, input_offset, input_width, input_scale};
}

Eigen::MatrixXd EncoderModel::features(const Eigen::Ref<const Eigen::MatrixXd>& y) const {
  if (y.rows() < input_offset + input_width) throw ArgumentError("observation narrower than encoder slice");
  return y.middleRows(input_offset, input_width) / input_scale;
}

Eigen::MatrixXd EncoderModel::logits(const Eigen::Ref<const Eigen::MatrixXd>& y) const {
  return net.forward(features(y));
}

Eigen::VectorXd encode_soft(const EncoderModel& enc, std::span<const double> y, double temperature) {
  Eigen::Map<const Eigen::VectorXd> col(y.data(), static_cast<Eigen::Index>(y.size()));
  return softmax(enc.logits(col), temperature);
}

Eigen::MatrixXd encode_soft_batch(const EncoderModel& enc, const Eigen::Ref<const Eigen::MatrixXd>& y,
                                  double temperature) {
  return softmax_columns(forward_chunked(enc.net, enc.features(y), 256), temperature);
}

int encode_hard(const EncoderModel& enc, std::span<const double> y) {
  Eigen::Map<const Eigen::VectorXd> col(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd z = enc.logits(col);
  return argmax_lowest(z);
}

std::vector<int> encode_hard_batch(const EncoderModel& enc, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  const Eigen::MatrixXd z = forward_chunked(enc.net, enc.features(y), 256);
  std::vector<int> out(z.cols());
  for (Eigen::Index n = 0; n < z.cols(); ++n) out[n] = argmax_lowest(Eigen::VectorXd(z.col(n)));
  return out;
}

Eigen::VectorXd EntropyModel::probabilities() const { return softmax(logits); }

Eigen::VectorXd EntropyModel::code_lengths() const { return neg_log2_softmax(logits); }

double rate_term(const EncoderModel& enc, const EntropyModel& ent, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                 double temperature) {
  if (batch.cols() == 0) throw ArgumentError("rate_term needs a nonempty batch");
  if (ent.size() != enc.K) throw ArgumentError("entropy model size differs from encoder alphabet");
  const Eigen::MatrixXd p = encode_soft_batch(enc, batch, temperature);
  const Eigen::VectorXd len = ent.code_lengths();
  return (len.transpose() * p).sum() / static_cast<double>(batch.cols());
}

double rate_term_hard(const EncoderModel& enc, const EntropyModel& ent, const Eigen::Ref<const Eigen::MatrixXd>& batch) {
  if (batch.cols() == 0) throw ArgumentError("rate_term needs a nonempty batch");
  const auto idx = encode_hard_batch(enc, batch);
  const Eigen::VectorXd len = ent.code_lengths();
  double acc = 0.0;
  for (int u : idx) acc += len[u];
  return acc / static_cast<double>(idx.size());
}

int RelayCodec::composite_size() const {
  int n = 1;
  for (const auto& e : encoders) n *= e.K;
  return n;
}

int RelayCodec::representation_width() const {
  int n = 0;
  for (const auto& e : encoders) n += e.K;
  return n;
}

std::vector<int> RelayCodec::component_sizes() const {
  std::vector<int> out;
  for (const auto& e : encoders) out.push_back(e.K);
  return out;
}

int RelayCodec::compose(std::span<const int> components) const {
  if (components.size() != encoders.size()) throw ArgumentError("component count mismatch");
  int u = 0;
  for (std::size_t c = 0; c < encoders.size(); ++c) {
    if (components[c] < 0 || components[c] >= encoders[c].K) throw ArgumentError("component index out of range");
    u = u * encoders[c].K + components[c];
  }
  return u;
}

std::vector<int> RelayCodec::decompose(int composite) const {
  if (composite < 0 || composite >= composite_size()) throw ArgumentError("composite index out of range");
  std::vector<int> out(encoders.size());
  for (std::size_t c = encoders.size(); c-- > 0;) {
    out[c] = composite % encoders[c].K;
    composite /= encoders[c].K;
  }
  return out;
}

int RelayCodec::encode_hard(std::span<const double> y) const {
  std::vector<int> comps;
  for (const auto& e : encoders) comps.push_back(ncf::encode_hard(e, y));
  return compose(comps);
}

std::vector<int> RelayCodec::encode_hard_batch(const Eigen::Ref<const Eigen::MatrixXd>& y) const {
  std::vector<int> out(y.cols(), 0);
  for (const auto& e : encoders) {
    const auto idx = ncf::encode_hard_batch(e, y);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = out[n] * e.K + idx[n];
  }
  return out;
}

RelayCodec make_relay_codec(const Constellation& c, IqMode mode, std::span<const int> sizes, double noise_variance,
                            std::span<const int> hidden, Rng& rng) {
  const double scale = std::sqrt(c.power() + noise_variance);
  RelayCodec relay;
  if (c.dim() == 1) {
    if (mode != IqMode::none) throw ConfigError("iq_mode applies only to complex constellations");
    if (sizes.size() != 1) throw ConfigError("real constellations take a single K per relay");
    relay.encoders.push_back(EncoderModel::create(0, 1, sizes[0], scale, hidden, rng));
  } else if (mode == IqMode::joint) {
    if (sizes.size() != 1) throw ConfigError("joint-IQ takes a single K per relay");
    relay.encoders.push_back(EncoderModel::create(0, 2, sizes[0], scale, hidden, rng));
  } else if (mode == IqMode::split) {
    if (sizes.size() != 2) throw ConfigError("split-IQ takes {K_I, K_Q} per relay");
    relay.encoders.push_back(EncoderModel::create(0, 1, sizes[0], scale, hidden, rng));
    relay.encoders.push_back(EncoderModel::create(1, 1, sizes[1], scale, hidden, rng));
  } else {
    throw ConfigError("complex constellations need iq_mode joint or split");
  }
  for (const auto& e : relay.encoders) relay.entropy.emplace_back(e.K);
  return relay;
}

}  // namespace ncf
