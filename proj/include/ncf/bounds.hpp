#pragma once

#include <limits>
#include <vector>

#include "ncf/constellation.hpp"

namespace ncf {

/// Gauss-Hermite rule for weight exp(-t^2) (physicists' convention).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  static const GaussHermite& order(int n);
};

inline constexpr int kHermiteOrder = 96;

/// I(X; X + N) in bits for uniform X on `c`, N Gaussian with total power
/// `variance` (split evenly over dimensions). Single-perfect-relay reference.
double mi_awgn(const Constellation& c, double variance);

/// I(X; Y1, Y2) for two independent Gaussian observations. Real
/// constellations use tensorized 2-D quadrature; IQ constellations use the
/// sufficient-statistic reduction (see mi_two_obs_sufficient).
double mi_two_obs(const Constellation& c, double variance1, double variance2);

/// I(X; Y1, Y2) through the inverse-variance weighted mean, which is a
/// sufficient statistic: equals mi_awgn at 1 / (1/s1 + 1/s2).
double mi_two_obs_sufficient(const Constellation& c, double variance1, double variance2);

struct BoundQuery {
  Constellation constellation = Constellation::build(Modulation::bpsk, 1.0);
  double variance1 = 1.0;
  double variance2 = 1.0;
  double rate1 = std::numeric_limits<double>::infinity();
  double rate2 = std::numeric_limits<double>::infinity();
};

/// min{ I(X;Y1,Y2), R1 + R2, I(X;Y1) + R2, I(X;Y2) + R1 } for the uniform
/// constellation input.
double cut_set(const BoundQuery& q);

}  // namespace ncf
