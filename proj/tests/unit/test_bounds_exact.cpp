#include <cmath>
#include <numbers>

#include "doctest.h"

#include "helpers.hpp"
#include "ncf/bounds.hpp"
#include "ncf/exact_eval.hpp"

using namespace ncf;

namespace {

// I(X; X + N) for BPSK by trapezoid integration over y given x = +1.
double bpsk_mi_trapezoid(double s2) {
  const double sd = std::sqrt(s2);
  const int n = 200000;
  const double lo = 1 - 14 * sd, hi = 1 + 14 * sd, dy = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = lo + i * dy;
    const double pdf = std::exp(-(y - 1) * (y - 1) / (2 * s2)) / std::sqrt(2 * std::numbers::pi * s2);
    const double f = pdf * std::log2(1 + std::exp(-2 * y / s2));
    acc += (i == 0 || i == n) ? f / 2 : f;
  }
  return 1.0 - acc * dy;
}

RelayPartition single(QuantizerPartition p) {
  RelayPartition r;
  r.components.push_back(std::move(p));
  r.offsets.push_back(0);
  return r;
}

QuantizerPartition sign_partition() {
  QuantizerPartition p;
  p.K = 2;
  p.breakpoints = {0.0};
  p.labels = {0, 1};
  return p;
}

QuantizerPartition constant_partition(int K) {
  QuantizerPartition p;
  p.K = K;
  p.labels = {0};
  return p;
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("extreme snr limits") {
    for (auto m : {Modulation::bpsk, Modulation::pam4, Modulation::pam8, Modulation::qam16}) {
      const auto c = Constellation::build(m, 1.0);
      const double bits = std::log2(c.size());
      CHECK(mi_awgn(c, snr_db_to_variance(-40, 1.0)) < 1e-3);
      CHECK(mi_awgn(c, snr_db_to_variance(40, 1.0)) == doctest::Approx(bits).epsilon(1e-6));
    }
  }

  TEST_CASE("bpsk at 5 dB against an independent integral") {
    const auto c = Constellation::build(Modulation::bpsk, 1.0);
    const double s2 = snr_db_to_variance(5, 1.0);
    CHECK(mi_awgn(c, s2) == doctest::Approx(bpsk_mi_trapezoid(s2)).epsilon(1e-7));
    CHECK(mi_awgn(c, s2) == doctest::Approx(0.859194).epsilon(1e-5));
  }

  TEST_CASE("two observations") {
    for (auto m : {Modulation::bpsk, Modulation::pam4, Modulation::pam8}) {
      const auto c = Constellation::build(m, 1.0);
      // Equal variances: the average is sufficient with half the variance.
      CHECK(mi_two_obs(c, 0.2, 0.2) == doctest::Approx(mi_awgn(c, 0.1)).epsilon(1e-7));
      CHECK(mi_two_obs(c, 0.1, 0.3) == doctest::Approx(mi_two_obs_sufficient(c, 0.1, 0.3)).epsilon(1e-7));
      // A useless second relay.
      CHECK(mi_two_obs(c, 0.1, 1e9) == doctest::Approx(mi_awgn(c, 0.1)).epsilon(1e-6));
      CHECK(mi_two_obs(c, 0.1, 0.3) >= mi_awgn(c, 0.1));
    }
  }

  TEST_CASE("cut set") {
    BoundQuery q;
    q.variance1 = q.variance2 = snr_db_to_variance(10, 1.0);
    q.rate1 = q.rate2 = 0.25;
    CHECK(cut_set(q) == doctest::Approx(0.5));
    q.rate1 = q.rate2 = 10.0;
    CHECK(cut_set(q) == doctest::Approx(mi_two_obs(q.constellation, q.variance1, q.variance2)));
    q.rate1 = 0.0;
    q.rate2 = 0.3;
    CHECK(cut_set(q) == doctest::Approx(0.3));
    q.rate1 = -1;
    CHECK_THROWS_AS(cut_set(q), ArgumentError);
  }

  TEST_CASE("quadrature rule") {
    const auto& gh = GaussHermite::order(kHermiteOrder);
    double w = 0, m2 = 0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      w += gh.weights[i];
      m2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    }
    CHECK(w == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-12));
  }
}

TEST_SUITE("exact_eval") {
  TEST_CASE("sign quantizer breakpoint") {
    const auto part = extract_partition(test::sign_quantizer(), -4, 4, 1001);
    REQUIRE(part.breakpoints.size() == 1);
    CHECK(std::abs(part.breakpoints[0]) < 1e-8);
    CHECK(part.labels == std::vector<int>{0, 1});
    CHECK(part.max_runs_per_label() == 1);
  }

  TEST_CASE("non-adjacent intervals are counted as separate runs") {
    const LabelFunction f = [](double y) { return std::abs(y) > 1 ? 0 : 1; };
    const auto part = extract_partition(f, 2, -3, 3, 601);
    REQUIRE(part.breakpoints.size() == 2);
    CHECK(part.breakpoints[0] == doctest::Approx(-1).epsilon(1e-8));
    CHECK(part.max_runs_per_label() == 2);
    const auto fid = check_partition(part, f, -3, 3, 100000);
    CHECK(fid.agreement == doctest::Approx(1.0));
  }

  TEST_CASE("cell masses are gaussian tails") {
    const auto p = sign_partition();
    const double x[] = {1.0};
    const auto v = cell_probs(p, x, 0.1);
    CHECK(v[0] == doctest::Approx(7.827011e-4).epsilon(1e-6));
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(normal_cdf(0.0) == 0.5);
  }

  TEST_CASE("conditionals are complete") {
    const auto c = Constellation::build(Modulation::pam8, 1.0);
    const auto part = extract_partition(test::nearest_level(c.levels()), -6, 6, 4000);
    const auto cond = relay_conditionals(single(part), c, 0.2);
    for (int x = 0; x < c.size(); ++x) CHECK(cond.composite.col(x).sum() == doctest::Approx(1.0).epsilon(1e-13));
  }

  TEST_CASE("constant quantizers carry nothing") {
    for (auto m : {Modulation::bpsk, Modulation::pam4, Modulation::pam8}) {
      const auto c = Constellation::build(m, 1.0);
      const auto e = exact_metrics(single(constant_partition(3)), single(constant_partition(1)), c, 0.1, 0.1);
      CHECK(e.mutual_information == doctest::Approx(0.0));
      CHECK(e.map_ser == doctest::Approx(1.0 - 1.0 / c.size()));
      CHECK(e.entropy1 == 0.0);
    }
  }

  TEST_CASE("noiseless limit") {
    const auto c = Constellation::build(Modulation::pam4, 1.0);
    const auto part = extract_partition(test::nearest_level(c.levels()), -5, 5, 2000);
    const auto e = exact_metrics(single(part), single(part), c, 1e-8, 1e-8);
    CHECK(e.mutual_information == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(e.map_ser < 1e-12);
    CHECK(e.entropy1 == doctest::Approx(2.0));
    CHECK(e.joint_entropy == doctest::Approx(2.0));
  }

  TEST_CASE("bpsk sign quantizers: closed form") {
    // Two independent hard decisions with crossover q; MAP errs only when both flip,
    // and on disagreement it is a coin toss that the lowest index resolves.
    const auto c = Constellation::build(Modulation::bpsk, 1.0);
    const double s2 = 0.5;
    const double q = 0.5 * std::erfc(1.0 / std::sqrt(2 * s2));
    const auto e = exact_metrics(single(sign_partition()), single(sign_partition()), c, s2, s2);
    CHECK(e.map_ser == doctest::Approx(q * q + q * (1 - q)).epsilon(1e-12));
    const double h2 = -q * std::log2(q) - (1 - q) * std::log2(1 - q);
    CHECK(e.mutual_information <= 2 * (1 - h2) + 1e-12);
    CHECK(e.mutual_information >= 1 - h2);
  }

  TEST_CASE("learned and Monte-Carlo metrics agree within three standard errors") {
    const auto c = Constellation::build(Modulation::pam4, 1.0);
    const auto cfg = ChannelConfig::from_snr_db(8.0, 6.0, 1.0, 1);
    Rng rng(21);
    auto m = test::system_of(test::relay_of(test::nearest_level(c.levels())),
                             test::relay_of(test::nearest_level({-0.5, 0.5})), 4, {8}, rng);
    m.relays[0].entropy[0].logits << 0.3, -0.2, 0.1, 0.0;
    std::array<RelayConditionals, 2> cond;
    std::array<RelayPartition, 2> parts;
    for (int r = 0; r < 2; ++r) {
      parts[r] = extract_relay(m.relays[r], 1.0, cfg.variance(r));
      cond[r] = relay_conditionals(parts[r], c, cfg.variance(r));
    }
    const auto ex = exact_metrics(cond[0], cond[1], c);
    const auto le = learned_exact(m, cond, c);
    const auto mc = mc_metrics(m, c, cfg, 400000, 99, &ex.map_decision);
    CHECK(std::abs(mc.ser - le.ser) < 3 * mc.ser_stderr);
    CHECK(std::abs(mc.map_ser - ex.map_ser) < 3 * mc.map_ser_stderr);
    CHECK(std::abs(mc.distortion - le.distortion) < 3 * mc.distortion_stderr);
    CHECK(std::abs(mc.rate[0] - le.rate[0]) < 3 * mc.rate_stderr[0]);
    CHECK(std::abs(mc.entropy[1] - ex.entropy2) < 3 * mc.entropy_stderr[1] + 1e-4);
    // MAP is optimal for fixed quantizers.
    CHECK(ex.map_ser <= le.ser + 1e-12);
  }

  TEST_CASE("standard error shrinks as one over root n") {
    const auto c = Constellation::build(Modulation::bpsk, 1.0);
    const auto cfg = ChannelConfig::from_snr_db(0.0, 0.0, 1.0, 1);
    Rng rng(1);
    const auto m = test::system_of(test::relay_of(test::sign_quantizer()), test::relay_of(test::sign_quantizer()), 2,
                                   {4}, rng);
    const auto a = mc_metrics(m, c, cfg, 100000, 3);
    const auto b = mc_metrics(m, c, cfg, 200000, 3);
    CHECK(a.ser_stderr / b.ser_stderr == doctest::Approx(std::sqrt(2.0)).epsilon(0.03));
    // Same seed, same samples: the shorter run is a prefix in whole blocks.
    CHECK(mc_metrics(m, c, cfg, 100000, 3).ser == a.ser);
  }
}
