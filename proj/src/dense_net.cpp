#include "ncf/dense_net.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

namespace ncf {

namespace {

std::atomic<std::uint64_t> g_version{1};

std::uint64_t next_version() { return g_version.fetch_add(1, std::memory_order_relaxed); }

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ArgumentError("truncated network file");
  return v;
}

constexpr char kMagic[8] = {'N', 'C', 'F', 'N', 'E', 'T', '0', '1'};

}  // namespace

double leaky_relu(double v) { return v > 0.0 ? v : kLeakySlope * v; }

void NetGradient::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

NetGradient& NetGradient::operator+=(const NetGradient& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

NetGradient& NetGradient::operator*=(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
  return *this;
}

std::vector<std::span<double>> NetGradient::blocks() {
  std::vector<std::span<double>> out;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.emplace_back(weight[i].data(), static_cast<std::size_t>(weight[i].size()));
    out.emplace_back(bias[i].data(), static_cast<std::size_t>(bias[i].size()));
  }
  return out;
}

bool NetGradient::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)), version_(next_version()) {
  if (layers_.empty()) throw ArgumentError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) throw ArgumentError("bias length must equal layer output width");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
      throw ArgumentError("consecutive layer widths are incompatible");
  }
}

DenseNet DenseNet::he_init(std::span<const int> widths, Rng& rng) {
  if (widths.size() < 2) throw ArgumentError("network needs input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i];
    const int out = widths[i + 1];
    if (in < 1 || out < 1) throw ArgumentError("layer widths must be positive");
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
    DenseLayer l;
    l.weight.resize(out, in);
    // Row-major fill so the draw order matches the serialized layout.
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = dist(rng);
    l.bias = Eigen::VectorXd::Zero(out);
    l.activation = (i + 2 == widths.size()) ? Activation::identity : Activation::leaky_relu;
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

DenseNet DenseNet::zeros(std::span<const int> widths) {
  if (widths.size() < 2) throw ArgumentError("network needs input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l;
    l.weight = Eigen::MatrixXd::Zero(widths[i + 1], widths[i]);
    l.bias = Eigen::VectorXd::Zero(widths[i + 1]);
    l.activation = (i + 2 == widths.size()) ? Activation::identity : Activation::leaky_relu;
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

int DenseNet::input_width() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
int DenseNet::output_width() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }

std::vector<int> DenseNet::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(input_width());
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

DenseLayer& DenseNet::mutable_layer(std::size_t i) {
  touch();
  return layers_.at(i);
}

std::vector<std::span<double>> DenseNet::parameter_blocks() {
  touch();
  std::vector<std::span<double>> out;
  for (auto& l : layers_) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

void DenseNet::touch() { version_ = next_version(); }

NetGradient DenseNet::zero_gradient() const {
  NetGradient g;
  for (const auto& l : layers_) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Tape* DenseNet::start_tape(Tape* tape) const {
  if (tape) {
    tape->net = this;
    tape->version = version_;
    tape->inputs.assign(layers_.size(), Eigen::MatrixXd());
    tape->preactivation.resize(layers_.size());
    tape->sparse = false;
    tape->sparse_input.resize(0, 0);
  }
  return tape;
}

Eigen::MatrixXd DenseNet::propagate(Eigen::MatrixXd z, Tape* tape) const {
  for (std::size_t i = 0;; ++i) {
    const auto& l = layers_[i];
    z.colwise() += l.bias;
    if (tape) tape->preactivation[i] = z;
    if (l.activation == Activation::leaky_relu) z = z.unaryExpr([](double v) { return leaky_relu(v); });
    if (i + 1 == layers_.size()) return z;
    Eigen::MatrixXd next = layers_[i + 1].weight * z;
    if (tape) tape->inputs[i + 1] = std::move(z);
    z = std::move(next);
  }
}

Eigen::MatrixXd DenseNet::forward(const Eigen::Ref<const Eigen::MatrixXd>& input, Tape* tape) const {
  if (input.rows() != input_width()) throw ArgumentError("network input width mismatch");
  start_tape(tape);
  Eigen::MatrixXd z = layers_.front().weight * input;
  if (tape) tape->inputs[0] = input;
  return propagate(std::move(z), tape);
}

Eigen::MatrixXd DenseNet::forward(const SparseInput& input, Tape* tape) const {
  if (input.rows() != input_width()) throw ArgumentError("network input width mismatch");
  start_tape(tape);
  Eigen::MatrixXd z = layers_.front().weight * input;
  if (tape) {
    tape->sparse_input = input;
    tape->sparse = true;
  }
  return propagate(std::move(z), tape);
}

void DenseNet::check_tape(const Tape& tape) const {
  if (tape.net != this || tape.version != version_ || tape.inputs.size() != layers_.size())
    throw InternalError("stale or mismatched tape passed to backward");
}

void DenseNet::backward(const Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& grad_logits, NetGradient& grad,
                        Eigen::MatrixXd* input_grad) const {
  check_tape(tape);
  if (grad_logits.rows() != output_width() || grad_logits.cols() != tape.preactivation.back().cols())
    throw ArgumentError("upstream gradient shape mismatch");
  Eigen::MatrixXd g = grad_logits;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    if (l.activation == Activation::leaky_relu) {
      g.array() *= tape.preactivation[k].array().unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
    }
    if (k == 0 && tape.sparse)
      grad.weight[k] += g * tape.sparse_input.transpose();
    else
      grad.weight[k].noalias() += g * tape.inputs[k].transpose();
    grad.bias[k] += g.rowwise().sum();
    if (k > 0 || input_grad) {
      Eigen::MatrixXd next = l.weight.transpose() * g;
      g = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(g);
}

bool DenseNet::operator==(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.activation != b.activation || a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols())
      return false;
    if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(double) * a.weight.size()) != 0) return false;
    if (std::memcmp(a.bias.data(), b.bias.data(), sizeof(double) * a.bias.size()) != 0) return false;
  }
  return true;
}

Eigen::MatrixXd forward_chunked(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input, int chunk,
                                ChunkedTape* tape) {
  if (chunk < 1) throw ArgumentError("chunk size must be positive");
  const int n = static_cast<int>(input.cols());
  const int count = (n + chunk - 1) / chunk;
  Eigen::MatrixXd out(net.output_width(), n);
  if (tape) {
    tape->chunk = chunk;
    tape->chunks.assign(count, Tape{});
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < count; ++c) {
    const int begin = c * chunk;
    const int len = std::min(chunk, n - begin);
    out.middleCols(begin, len) = net.forward(input.middleCols(begin, len), tape ? &tape->chunks[c] : nullptr);
  }
  return out;
}

Eigen::MatrixXd forward_chunked(const DenseNet& net, const SparseInput& input, int chunk, ChunkedTape* tape) {
  if (chunk < 1) throw ArgumentError("chunk size must be positive");
  const int n = static_cast<int>(input.cols());
  const int count = (n + chunk - 1) / chunk;
  Eigen::MatrixXd out(net.output_width(), n);
  if (tape) {
    tape->chunk = chunk;
    tape->chunks.assign(count, Tape{});
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < count; ++c) {
    const int begin = c * chunk;
    const int len = std::min(chunk, n - begin);
    const SparseInput part = input.middleCols(begin, len);
    out.middleCols(begin, len) = net.forward(part, tape ? &tape->chunks[c] : nullptr);
  }
  return out;
}

void backward_chunked(const DenseNet& net, const ChunkedTape& tape, const Eigen::Ref<const Eigen::MatrixXd>& grad_logits,
                      NetGradient& grad) {
  const int count = static_cast<int>(tape.chunks.size());
  const int n = static_cast<int>(grad_logits.cols());
  std::vector<NetGradient> partial(count, net.zero_gradient());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < count; ++c) {
    const int begin = c * tape.chunk;
    const int len = std::min(tape.chunk, n - begin);
    net.backward(tape.chunks[c], grad_logits.middleCols(begin, len), partial[c]);
  }
  for (const auto& p : partial) grad += p;
}

namespace reference {

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            std::vector<std::vector<double>>* activations,
                            std::vector<std::vector<double>>* preactivations) {
  if (static_cast<int>(input.size()) != net.input_width()) throw ArgumentError("network input width mismatch");
  std::vector<double> a(input.begin(), input.end());
  if (activations) activations->clear();
  if (preactivations) preactivations->clear();
  for (const auto& l : net.layers()) {
    const auto rows = l.weight.rows();
    const auto cols = l.weight.cols();
    std::vector<double> z(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = l.bias[r];
      for (Eigen::Index c = 0; c < cols; ++c) acc += l.weight(r, c) * a[c];
      z[r] = acc;
    }
    if (activations) activations->push_back(a);
    if (preactivations) preactivations->push_back(z);
    if (l.activation == Activation::leaky_relu)
      for (auto& v : z) v = leaky_relu(v);
    a = std::move(z);
  }
  return a;
}

void backward(const DenseNet& net, const std::vector<std::vector<double>>& activations,
              const std::vector<std::vector<double>>& preactivations, std::span<const double> grad_logits,
              NetGradient& grad) {
  std::vector<double> g(grad_logits.begin(), grad_logits.end());
  for (std::size_t k = net.layer_count(); k-- > 0;) {
    const auto& l = net.layer(k);
    if (l.activation == Activation::leaky_relu)
      for (std::size_t r = 0; r < g.size(); ++r)
        if (!(preactivations[k][r] > 0.0)) g[r] *= kLeakySlope;
    const auto rows = l.weight.rows();
    const auto cols = l.weight.cols();
    std::vector<double> prev(cols, 0.0);
    for (Eigen::Index r = 0; r < rows; ++r) {
      grad.bias[k][r] += g[r];
      for (Eigen::Index c = 0; c < cols; ++c) {
        grad.weight[k](r, c) += g[r] * activations[k][c];
        prev[c] += l.weight(r, c) * g[r];
      }
    }
    g = std::move(prev);
  }
}

}  // namespace reference

void write_net(std::ostream& os, const DenseNet& net) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& l : net.layers()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.weight.cols()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.weight.rows()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put<double>(os, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put<double>(os, l.bias[r]);
  }
}

DenseNet read_net(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ArgumentError("not a network file");
  const auto count = get<std::uint32_t>(is);
  std::vector<DenseLayer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto in = get<std::uint32_t>(is);
    const auto out = get<std::uint32_t>(is);
    const auto act = get<std::uint8_t>(is);
    if (act > 1) throw ArgumentError("unknown activation tag");
    DenseLayer l;
    l.activation = static_cast<Activation>(act);
    l.weight.resize(out, in);
    for (std::uint32_t r = 0; r < out; ++r)
      for (std::uint32_t c = 0; c < in; ++c) l.weight(r, c) = get<double>(is);
    l.bias.resize(out);
    for (std::uint32_t r = 0; r < out; ++r) l.bias[r] = get<double>(is);
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

}  // namespace ncf
