#include <cmath>

#include "doctest.h"

#include "ncf/channel.hpp"
#include "ncf/constellation.hpp"

using namespace ncf;

TEST_SUITE("constellation") {
  TEST_CASE("bpsk is antipodal with uniform prior") {
    const auto c = Constellation::build(Modulation::bpsk, 1.0);
    REQUIRE(c.size() == 2);
    CHECK(c.point(0)[0] == doctest::Approx(-1.0));
    CHECK(c.point(1)[0] == doctest::Approx(1.0));
    CHECK(c.prior()[0] == 0.5);
    CHECK(c.prior()[1] == 0.5);
  }

  TEST_CASE("4-pam levels scale by 1/sqrt(5)") {
    const auto c = Constellation::build(Modulation::pam4, 1.0);
    const double s = 1.0 / std::sqrt(5.0);
    const double want[] = {-3 * s, -s, s, 3 * s};
    for (int i = 0; i < 4; ++i) CHECK(c.point(i)[0] == doctest::Approx(want[i]).epsilon(1e-15));
    CHECK(c.average_power() == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("16-qam grid scales by 1/sqrt(10)") {
    const auto c = Constellation::build(Modulation::qam16, 1.0);
    REQUIRE(c.dim() == 2);
    REQUIRE(c.size() == 16);
    const double s = 1.0 / std::sqrt(10.0);
    // Row-major over (in-phase, quadrature).
    CHECK(c.point(0)[0] == doctest::Approx(-3 * s));
    CHECK(c.point(0)[1] == doctest::Approx(-3 * s));
    CHECK(c.point(1)[1] == doctest::Approx(-s));
    CHECK(c.point(4)[0] == doctest::Approx(-s));
    CHECK(c.average_power() == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("power scaling") {
    for (auto m : {Modulation::bpsk, Modulation::pam4, Modulation::pam8, Modulation::qam4, Modulation::qam16})
      CHECK(Constellation::build(m, 2.5).average_power() == doctest::Approx(2.5).epsilon(1e-13));
  }

  TEST_CASE("one-based symbol mapping and inverse") {
    const auto bpsk = Constellation::build(Modulation::bpsk, 1.0);
    CHECK(symbol_of(1, bpsk)[0] == doctest::Approx(-1.0));
    const auto pam = Constellation::build(Modulation::pam4, 1.0);
    CHECK(symbol_of(4, pam)[0] == doctest::Approx(3.0 / std::sqrt(5.0)));
    for (auto m : {Modulation::pam8, Modulation::qam16}) {
      const auto c = Constellation::build(m, 1.0);
      for (int w = 1; w <= c.size(); ++w) CHECK(c.index_of(symbol_of(w, c)) == w - 1);
    }
    CHECK_THROWS_AS(symbol_of(0, bpsk), ArgumentError);
    CHECK_THROWS_AS(symbol_of(3, bpsk), ArgumentError);
  }

  TEST_CASE("names") {
    CHECK(parse_modulation("16QAM") == Modulation::qam16);
    CHECK(parse_modulation("4pam") == Modulation::pam4);
    CHECK(to_string(Modulation::pam8) == "8pam");
    CHECK_THROWS_AS(parse_modulation("32qam"), ConfigError);
    CHECK_THROWS_AS(Constellation::build(Modulation::bpsk, 0.0), ArgumentError);
  }
}

TEST_SUITE("channel") {
  TEST_CASE("snr to variance") {
    CHECK(snr_db_to_variance(10.0, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(snr_db_to_variance(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(snr_db_to_variance(5.0, 1.0) == doctest::Approx(0.3162278).epsilon(1e-7));
    CHECK(variance_to_snr_db(snr_db_to_variance(7.3, 2.0), 2.0) == doctest::Approx(7.3));
    CHECK_THROWS(snr_db_to_variance(NAN, 1.0));
  }

  TEST_CASE("noiseless limit copies the symbol") {
    ChannelConfig cfg;
    cfg.sigma1_sq = cfg.sigma2_sq = 0.0;
    NoiseStreams noise = NoiseStreams::from_run_seed(3);
    const double x[] = {0.7};
    double y1[1], y2[1];
    sample(x, cfg, noise, y1, y2);
    CHECK(y1[0] == 0.7);
    CHECK(y2[0] == 0.7);
  }

  TEST_CASE("gaussian moments and independence of the relay noises") {
    ChannelConfig cfg;
    cfg.sigma1_sq = cfg.sigma2_sq = 0.1;
    NoiseStreams noise = NoiseStreams::from_run_seed(11);
    const int n = 1000000;
    const double x[] = {1.0};
    double s1 = 0, s11 = 0, s2 = 0, s22 = 0, s12 = 0;
    for (int i = 0; i < n; ++i) {
      double y1[1], y2[1];
      sample(x, cfg, noise, y1, y2);
      const double a = y1[0] - 1.0, b = y2[0] - 1.0;
      s1 += y1[0];
      s11 += a * a;
      s2 += b;
      s22 += b * b;
      s12 += a * b;
    }
    const double mean = s1 / n;
    const double var = s11 / n - (mean - 1.0) * (mean - 1.0);
    CHECK(std::abs(mean - 1.0) < 3 * std::sqrt(0.1 / n));
    CHECK(std::abs(var - 0.1) < 3 * std::sqrt(2 * 0.01 / n));
    const double corr = (s12 / n) / std::sqrt((s11 / n) * (s22 / n));
    CHECK(std::abs(corr) < 3.0 / std::sqrt(n));
  }

  TEST_CASE("complex noise splits power over I and Q") {
    const auto cfg = ChannelConfig::from_snr_db(10.0, 10.0, 1.0, 2);
    CHECK(cfg.noise_std(0) == doctest::Approx(std::sqrt(0.05)));
  }

  TEST_CASE("batches are reproducible and symbols uniform") {
    const auto c = Constellation::build(Modulation::pam4, 1.0);
    const auto cfg = ChannelConfig::from_snr_db(10.0, 5.0, 1.0, 1);
    auto draw = [&] {
      Rng src = make_rng(5, Stream::source);
      NoiseStreams noise = NoiseStreams::from_run_seed(5);
      return draw_batch(c, cfg, 40000, src, noise);
    };
    const Batch a = draw(), b = draw();
    CHECK(a.symbols == b.symbols);
    CHECK(a.y[0] == b.y[0]);
    CHECK(a.y[1] == b.y[1]);
    int counts[4] = {};
    for (int s : a.symbols) ++counts[s];
    for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] / 40000.0 - 0.25) < 4 * std::sqrt(0.25 * 0.75 / 40000));
    CHECK_THROWS(ChannelConfig::from_snr_db(10, INFINITY, 1.0, 1));
  }
}
