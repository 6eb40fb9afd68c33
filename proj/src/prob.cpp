#include "ncf/prob.hpp"

#include <algorithm>
#include <cmath>

#include "ncf/common.hpp"

namespace ncf {

Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits, double temperature) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index n = 0; n < logits.cols(); ++n) out.col(n) = softmax(logits.col(n), temperature);
  return out;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits, double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("softmax temperature must be positive");
  Eigen::VectorXd z = logits / temperature;
  const double mx = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - mx).exp();
  return e / e.sum();
}

Eigen::VectorXd neg_log2_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (lse - logits.array()) / kLn2;
}

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

double entropy_term_bits(double p) {
  // Floor keeps log finite; p log p -> 0 at p = 0.
  if (p <= 0.0) return 0.0;
  return -p * std::log2(std::max(p, 1e-300));
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h += entropy_term_bits(v);
  return h;
}

}  // namespace ncf
