#pragma once

#include <span>

#include <Eigen/Dense>

namespace ncf {

/// Column-wise softmax of logits / temperature.
Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits, double temperature = 1.0);
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits, double temperature = 1.0);
/// -log2 softmax(logits), computed through log-sum-exp.
Eigen::VectorXd neg_log2_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// Index of the largest entry; ties go to the lowest index.
int argmax_lowest(std::span<const double> v);
inline int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return argmax_lowest(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

/// -p log2 p with 0 log 0 = 0.
double entropy_term_bits(double p);
double entropy_bits(std::span<const double> p);

}  // namespace ncf
