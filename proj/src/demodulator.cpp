#include "ncf/demodulator.hpp"

#include <numeric>

#include "ncf/prob.hpp"

namespace ncf {

namespace {

int product(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 1, std::multiplies<>()); }
int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

std::vector<int> demod_widths(const std::vector<std::vector<int>>& comps, int num_symbols, std::span<const int> hidden) {
  if (comps.empty() || comps.size() > 2) throw ConfigError("demodulator serves one or two relays");
  if (num_symbols < 2) throw ConfigError("demodulator needs at least two symbols");
  int width = 0;
  for (const auto& r : comps) {
    if (r.empty()) throw ConfigError("relay without quantizer components");
    for (int k : r)
      if (k < 1) throw ConfigError("component alphabet size must be positive");
    width += sum(r);
  }
  std::vector<int> widths{width};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(num_symbols);
  return widths;
}

}  // namespace

DemodulatorModel DemodulatorModel::create(std::vector<std::vector<int>> relay_components, int num_symbols,
                                          std::span<const int> hidden, Rng& rng) {
  const auto widths = demod_widths(relay_components, num_symbols, hidden);
  return DemodulatorModel{DenseNet::he_init(widths, rng), std::move(relay_components), num_symbols};
}

DemodulatorModel DemodulatorModel::zeros(std::vector<std::vector<int>> relay_components, int num_symbols,
                                         std::span<const int> hidden) {
  const auto widths = demod_widths(relay_components, num_symbols, hidden);
  return DemodulatorModel{DenseNet::zeros(widths), std::move(relay_components), num_symbols};
}

int DemodulatorModel::composite_size(int relay) const {
  if (relay >= relay_count()) return 1;
  return product(relay_components[relay]);
}

int DemodulatorModel::representation_width(int relay) const {
  if (relay >= relay_count()) return 0;
  return sum(relay_components[relay]);
}

Eigen::VectorXd DemodulatorModel::one_hot(int relay, int u) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(representation_width(relay));
  if (relay >= relay_count()) return v;
  if (u < 0 || u >= composite_size(relay)) throw ArgumentError("relay index out of range");
  const auto& comps = relay_components[relay];
  int offset = representation_width(relay);
  for (std::size_t c = comps.size(); c-- > 0;) {
    offset -= comps[c];
    v[offset + u % comps[c]] = 1.0;
    u /= comps[c];
  }
  return v;
}

Eigen::VectorXd DemodulatorModel::pair_input(int u1, int u2) const {
  Eigen::VectorXd v(input_width());
  v << one_hot(0, u1), one_hot(1, u2);
  return v;
}

Eigen::MatrixXd DemodulatorModel::all_pair_inputs() const {
  const int u2n = composite_size(1);
  Eigen::MatrixXd x(input_width(), pair_count());
  for (int u1 = 0; u1 < composite_size(0); ++u1)
    for (int u2 = 0; u2 < u2n; ++u2) x.col(u1 * u2n + u2) = pair_input(u1, u2);
  return x;
}

SparseInput DemodulatorModel::all_pair_inputs_sparse() const {
  const int u2n = composite_size(1);
  std::vector<Eigen::Triplet<double>> entries;
  for (int u1 = 0; u1 < composite_size(0); ++u1)
    for (int u2 = 0; u2 < u2n; ++u2) {
      const Eigen::VectorXd v = pair_input(u1, u2);
      for (Eigen::Index k = 0; k < v.size(); ++k)
        if (v[k] != 0.0) entries.emplace_back(static_cast<int>(k), u1 * u2n + u2, v[k]);
    }
  SparseInput x(input_width(), pair_count());
  x.setFromTriplets(entries.begin(), entries.end());
  return x;
}

Eigen::VectorXd demod_soft(const DemodulatorModel& dem, std::span<const double> r1, std::span<const double> r2) {
  if (static_cast<int>(r1.size()) != dem.representation_width(0) ||
      static_cast<int>(r2.size()) != dem.representation_width(1))
    throw ArgumentError("demodulator input width mismatch");
  Eigen::VectorXd in(dem.input_width());
  for (std::size_t i = 0; i < r1.size(); ++i) in[i] = r1[i];
  for (std::size_t i = 0; i < r2.size(); ++i) in[r1.size() + i] = r2[i];
  return softmax(dem.net.forward(in));
}

int demod_hard(const DemodulatorModel& dem, int u1, int u2) {
  const Eigen::VectorXd z = dem.net.forward(dem.pair_input(u1, u2));
  return argmax_lowest(z);
}

PairTable pair_table(const DemodulatorModel& dem) {
  PairTable t;
  t.u1_size = dem.composite_size(0);
  t.u2_size = dem.composite_size(1);
  t.logits = forward_chunked(dem.net, dem.all_pair_inputs_sparse(), 128);
  const auto pairs = t.logits.cols();
  t.probability.resize(t.logits.rows(), pairs);
  t.code_length.resize(t.logits.rows(), pairs);
  t.decision.resize(pairs);
  for (Eigen::Index m = 0; m < pairs; ++m) {
    t.probability.col(m) = softmax(t.logits.col(m));
    t.code_length.col(m) = neg_log2_softmax(t.logits.col(m));
    t.decision[m] = argmax_lowest(Eigen::VectorXd(t.logits.col(m)));
  }
  return t;
}

double distortion(const PairTable& table, const Eigen::Ref<const Eigen::MatrixXd>& p1,
                  const Eigen::Ref<const Eigen::MatrixXd>& p2, std::span<const int> symbols) {
  const auto n = static_cast<Eigen::Index>(symbols.size());
  if (n == 0) throw ArgumentError("distortion needs a nonempty batch");
  if (p1.rows() != table.u1_size || p2.rows() != table.u2_size || p1.cols() != n || p2.cols() != n)
    throw ArgumentError("index distribution shape mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int w = symbols[i];
    for (int u1 = 0; u1 < table.u1_size; ++u1) {
      if (p1(u1, i) == 0.0) continue;
      double inner = 0.0;
      for (int u2 = 0; u2 < table.u2_size; ++u2) inner += p2(u2, i) * table.code_length(w, table.pair(u1, u2));
      acc += p1(u1, i) * inner;
    }
  }
  return acc / static_cast<double>(n);
}

double distortion(const DemodulatorModel& dem, const Eigen::Ref<const Eigen::MatrixXd>& p1,
                  const Eigen::Ref<const Eigen::MatrixXd>& p2, std::span<const int> symbols) {
  return distortion(pair_table(dem), p1, p2, symbols);
}

}  // namespace ncf
