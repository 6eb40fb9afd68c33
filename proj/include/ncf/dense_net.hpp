#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ncf/common.hpp"

namespace ncf {

using SparseInput = Eigen::SparseMatrix<double>;

enum class Activation : std::uint8_t { identity = 0, leaky_relu = 1 };

/// Negative-side slope of the leaky ReLU.
inline constexpr double kLeakySlope = 0.01;

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;
};

/// Gradient record shaped like a DenseNet's parameters.
struct NetGradient {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void set_zero();
  NetGradient& operator+=(const NetGradient& other);
  NetGradient& operator*=(double s);
  /// Blocks in the same order as DenseNet::parameter_blocks().
  std::vector<std::span<double>> blocks();
  bool all_finite() const;
};

class DenseNet;

/// Activation record of one forward pass, consumed by DenseNet::backward.
struct Tape {
  const DenseNet* net = nullptr;
  std::uint64_t version = 0;
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer (inputs[0] empty if sparse)
  std::vector<Eigen::MatrixXd> preactivation;
  SparseInput sparse_input;
  bool sparse = false;
};

/// Fully connected feed-forward network. Hidden layers use leaky ReLU and
/// the output layer is affine (logits). Batched calls take one sample per
/// column.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  /// widths = {input, hidden..., output}; He fan-in initialization.
  static DenseNet he_init(std::span<const int> widths, Rng& rng);
  static DenseNet zeros(std::span<const int> widths);

  int input_width() const;
  int output_width() const;
  std::size_t layer_count() const { return layers_.size(); }
  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
  std::span<const DenseLayer> layers() const { return layers_; }
  std::vector<int> widths() const;
  std::size_t parameter_count() const;

  /// Mutable access invalidates outstanding tapes.
  DenseLayer& mutable_layer(std::size_t i);
  std::vector<std::span<double>> parameter_blocks();
  std::uint64_t version() const { return version_; }
  void touch();

  NetGradient zero_gradient() const;

  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::MatrixXd>& input, Tape* tape = nullptr) const;
  /// Same as the dense overload; the first layer costs out x nonzeros.
  Eigen::MatrixXd forward(const SparseInput& input, Tape* tape = nullptr) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
  /// Returns d(loss)/d(input) when `input_grad` is non-null.
  void backward(const Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& grad_logits, NetGradient& grad,
                Eigen::MatrixXd* input_grad = nullptr) const;

  bool operator==(const DenseNet& other) const;

 private:
  void check_tape(const Tape& tape) const;
  Tape* start_tape(Tape* tape) const;
  /// Runs the network from the first layer's bias-free preactivation.
  Eigen::MatrixXd propagate(Eigen::MatrixXd z, Tape* tape) const;

  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// Column-chunked batched passes. Chunks are dispatched with OpenMP and
/// reduced in chunk order, so results do not depend on the thread count.
struct ChunkedTape {
  std::vector<Tape> chunks;
  int chunk = 0;
};
Eigen::MatrixXd forward_chunked(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input, int chunk,
                                ChunkedTape* tape = nullptr);
Eigen::MatrixXd forward_chunked(const DenseNet& net, const SparseInput& input, int chunk,
                                ChunkedTape* tape = nullptr);
void backward_chunked(const DenseNet& net, const ChunkedTape& tape, const Eigen::Ref<const Eigen::MatrixXd>& grad_logits,
                      NetGradient& grad);

/// Serial single-sample reference path with plain loops (no BLAS-style
/// kernels). Used to cross-check the batched kernels.
namespace reference {
std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            std::vector<std::vector<double>>* activations = nullptr,
                            std::vector<std::vector<double>>* preactivations = nullptr);
/// Accumulates into `grad`.
void backward(const DenseNet& net, const std::vector<std::vector<double>>& activations,
              const std::vector<std::vector<double>>& preactivations, std::span<const double> grad_logits,
              NetGradient& grad);
}  // namespace reference

double leaky_relu(double v);

/// Binary model format, little-endian:
///   magic "NCFNET01" | u32 layer count | per layer: u32 in, u32 out, u8 activation,
///   f64[out*in] weights row-major, f64[out] bias.
void write_net(std::ostream& os, const DenseNet& net);
DenseNet read_net(std::istream& is);

}  // namespace ncf
