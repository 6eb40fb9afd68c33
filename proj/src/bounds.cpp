#include "ncf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ncf/common.hpp"

namespace ncf {

namespace {

GaussHermite golub_welsch(int n) {
  // Jacobi matrix of the Hermite recurrence: off-diagonal sqrt(k / 2).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  GaussHermite gh;
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    gh.nodes.push_back(solver.eigenvalues()[i]);
    const double v0 = solver.eigenvectors()(0, i);
    gh.weights.push_back(mu0 * v0 * v0);
  }
  return gh;
}

double log_sum_exp(const double* v, int n) {
  double mx = v[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

const GaussHermite& GaussHermite::order(int n) {
  if (n < 2) throw ArgumentError("Gauss-Hermite order must be at least 2");
  static std::mutex mu;
  static std::map<int, GaussHermite> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, golub_welsch(n)).first;
  return it->second;
}

double mi_awgn(const Constellation& c, double variance) {
  if (!(variance > 0.0)) throw ArgumentError("noise variance must be positive");
  const auto& gh = GaussHermite::order(kHermiteOrder);
  const int m = c.size();
  const int d = c.dim();
  const double s2 = variance / d;  // per-dimension variance
  const double scale = std::sqrt(2.0 * s2);
  const int nodes = static_cast<int>(gh.nodes.size());
  const int grid = d == 1 ? nodes : nodes * nodes;
  std::vector<double> expo(m);
  double acc = 0.0;
  // I = log2 M - (1/M) sum_x E_n log2 sum_x' exp(-(|x - x' + n|^2 - |n|^2) / (2 s2)).
  for (int x = 0; x < m; ++x) {
    const auto px = c.point(x);
    for (int g = 0; g < grid; ++g) {
      double noise[2] = {0.0, 0.0};
      double weight = 1.0;
      for (int k = 0; k < d; ++k) {
        const int node = k == 0 ? g % nodes : g / nodes;
        noise[k] = scale * gh.nodes[node];
        weight *= gh.weights[node] / std::sqrt(std::numbers::pi);
      }
      for (int xp = 0; xp < m; ++xp) {
        const auto q = c.point(xp);
        double e = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = px[k] - q[k];
          e -= (diff * diff + 2.0 * diff * noise[k]) / (2.0 * s2);
        }
        expo[xp] = e;
      }
      acc += weight * log_sum_exp(expo.data(), m);
    }
  }
  return std::log2(static_cast<double>(m)) - acc / (m * kLn2);
}

double mi_two_obs_sufficient(const Constellation& c, double variance1, double variance2) {
  if (!(variance1 > 0.0) || !(variance2 > 0.0)) throw ArgumentError("noise variances must be positive");
  return mi_awgn(c, 1.0 / (1.0 / variance1 + 1.0 / variance2));
}

double mi_two_obs(const Constellation& c, double variance1, double variance2) {
  if (!(variance1 > 0.0) || !(variance2 > 0.0)) throw ArgumentError("noise variances must be positive");
  if (c.dim() != 1) return mi_two_obs_sufficient(c, variance1, variance2);
  const auto& gh = GaussHermite::order(kHermiteOrder);
  const int m = c.size();
  const int nodes = static_cast<int>(gh.nodes.size());
  const double sc1 = std::sqrt(2.0 * variance1);
  const double sc2 = std::sqrt(2.0 * variance2);
  std::vector<double> expo(m);
  double acc = 0.0;
  for (int x = 0; x < m; ++x) {
    const double px = c.point(x)[0];
    for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < nodes; ++j) {
        const double n1 = sc1 * gh.nodes[i];
        const double n2 = sc2 * gh.nodes[j];
        const double weight = gh.weights[i] * gh.weights[j] / std::numbers::pi;
        for (int xp = 0; xp < m; ++xp) {
          const double diff = px - c.point(xp)[0];
          expo[xp] = -(diff * diff + 2.0 * diff * n1) / (2.0 * variance1) -
                     (diff * diff + 2.0 * diff * n2) / (2.0 * variance2);
        }
        acc += weight * log_sum_exp(expo.data(), m);
      }
  }
  return std::log2(static_cast<double>(m)) - acc / (m * kLn2);
}

double cut_set(const BoundQuery& q) {
  if (q.rate1 < 0.0 || q.rate2 < 0.0) throw ArgumentError("link rates must be nonnegative");
  const auto& c = q.constellation;
  double best = mi_two_obs(c, q.variance1, q.variance2);
  best = std::min(best, q.rate1 + q.rate2);
  if (std::isfinite(q.rate2)) best = std::min(best, mi_awgn(c, q.variance1) + q.rate2);
  if (std::isfinite(q.rate1)) best = std::min(best, mi_awgn(c, q.variance2) + q.rate1);
  return best;
}

}  // namespace ncf
