#include <cmath>

#include "doctest.h"

#include "helpers.hpp"
#include "ncf/system.hpp"
#include "ncf/trainer.hpp"

using namespace ncf;

namespace {

TrainConfig small_config(Modulation m, IqMode iq, std::vector<int> K) {
  TrainConfig cfg;
  cfg.modulation = m;
  cfg.iq_mode = iq;
  cfg.K1 = cfg.K2 = std::move(K);
  cfg.hidden = {12, 10};
  return cfg;
}

Batch batch_for(const TrainConfig& cfg, int n, std::uint64_t seed) {
  Rng src = make_rng(seed, Stream::source);
  NoiseStreams noise = NoiseStreams::from_run_seed(seed);
  return draw_batch(cfg.constellation(), cfg.channel(), n, src, noise);
}

}  // namespace

TEST_SUITE("system") {
  TEST_CASE("loss arithmetic") {
    // Uniform everything: rates log2 K each, distortion log2 |X|.
    auto cfg = small_config(Modulation::pam4, IqMode::none, {8});
    SystemModels m;
    m.relays = {test::relay_of(test::constant_encoder(8)), test::relay_of(test::constant_encoder(8))};
    const int hidden[] = {6};
    m.demod = DemodulatorModel::zeros({{8}, {8}}, 4, hidden);
    LossOptions opt;
    opt.lambda = 2.5;
    const auto v = evaluate_loss(m, batch_for(cfg, 64, 1), opt);
    CHECK(v.rate[0] == doctest::Approx(3.0));
    CHECK(v.rate[1] == doctest::Approx(3.0));
    CHECK(v.distortion == doctest::Approx(2.0));
    CHECK(v.total == doctest::Approx(6.0 + 2.5 * 2.0));
  }

  TEST_CASE("single-index relays cost lambda log2|X|") {
    auto cfg = small_config(Modulation::pam8, IqMode::none, {1});
    Rng rng(4);
    auto m = init_distributed(cfg);
    // Whatever the demodulator, its best constant answer is uniform; a zero net gives it.
    const int hidden[] = {5};
    m.demod = DemodulatorModel::zeros({{1}, {1}}, 8, hidden);
    LossOptions opt;
    opt.lambda = 3.0;
    const auto v = evaluate_loss(m, batch_for(cfg, 100, 2), opt);
    CHECK(v.rate[0] == 0.0);
    CHECK(v.rate[1] == 0.0);
    CHECK(v.total == doctest::Approx(3.0 * 3.0));
  }

  TEST_CASE("gradient of the full loss matches finite differences") {
    Rng rng(11);
    struct Case {
      Modulation m;
      IqMode iq;
      std::vector<int> K;
    };
    for (const auto& c : {Case{Modulation::pam4, IqMode::none, {6}}, Case{Modulation::qam16, IqMode::split, {3, 4}},
                          Case{Modulation::qam4, IqMode::joint, {5}}}) {
      auto cfg = small_config(c.m, c.iq, c.K);
      cfg.seed = 9;
      const auto m = test::random_system(cfg, rng);
      LossOptions opt;
      opt.lambda = 1.7;
      opt.temperature = 0.6;
      opt.chunk = 16;
      CHECK(test::loss_fd_error(m, batch_for(cfg, 40, 3), opt, 40, rng) < 1e-4);
    }
  }

  TEST_CASE("batched and reference objectives agree") {
    Rng rng(5);
    for (auto iq : {IqMode::none, IqMode::split}) {
      auto cfg = iq == IqMode::none ? small_config(Modulation::pam4, iq, {5})
                                    : small_config(Modulation::qam16, iq, {3, 3});
      cfg.K2 = iq == IqMode::none ? std::vector<int>{3} : std::vector<int>{2, 4};
      const auto m = test::random_system(cfg, rng);
      const auto b = batch_for(cfg, 37, 8);
      LossOptions opt;
      opt.lambda = 4.0;
      opt.temperature = 0.3;
      opt.chunk = 7;
      auto g1 = SystemGradient::zeros_like(m), g2 = SystemGradient::zeros_like(m);
      const auto a = evaluate_loss(m, b, opt, &g1);
      const auto r = reference::evaluate_loss(m, b, opt, &g2);
      CHECK(a.total == doctest::Approx(r.total).epsilon(1e-12));
      CHECK(a.distortion == doctest::Approx(r.distortion).epsilon(1e-12));
      const auto x = gradient_blocks(g1, true, true), y = gradient_blocks(g2, true, true);
      REQUIRE(x.size() == y.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x[i].size(); ++j) worst = std::max(worst, std::abs(x[i][j] - y[i][j]));
      CHECK(worst < 1e-11);
    }
  }

  TEST_CASE("chunk size does not change the result") {
    Rng rng(6);
    auto cfg = small_config(Modulation::pam4, IqMode::none, {7});
    const auto m = test::random_system(cfg, rng);
    const auto b = batch_for(cfg, 50, 1);
    LossOptions o1, o2;
    o1.chunk = 3;
    o2.chunk = 1000;
    auto g1 = SystemGradient::zeros_like(m), g2 = SystemGradient::zeros_like(m);
    CHECK(evaluate_loss(m, b, o1, &g1).total == doctest::Approx(evaluate_loss(m, b, o2, &g2).total).epsilon(1e-14));
  }

  TEST_CASE("frozen relays receive no gradient") {
    Rng rng(2);
    auto cfg = small_config(Modulation::pam4, IqMode::none, {4});
    const auto m = test::random_system(cfg, rng);
    LossOptions opt;
    opt.train_relays = false;
    auto g = SystemGradient::zeros_like(m);
    evaluate_loss(m, batch_for(cfg, 20, 1), opt, &g);
    for (const auto& b : gradient_blocks(g, true, false))
      for (double v : b) CHECK(v == 0.0);
  }

  TEST_CASE("invalid lambda") {
    Rng rng(2);
    auto cfg = small_config(Modulation::bpsk, IqMode::none, {2});
    const auto m = test::random_system(cfg, rng);
    LossOptions opt;
    opt.lambda = 0.0;
    CHECK_THROWS_AS(evaluate_loss(m, batch_for(cfg, 4, 1), opt), ConfigError);
  }
}
