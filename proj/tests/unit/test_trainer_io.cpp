#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "helpers.hpp"
#include "ncf/experiments.hpp"
#include "ncf/record_io.hpp"
#include "ncf/trainer.hpp"

using namespace ncf;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny(Scheme s = Scheme::distributed) {
  TrainConfig cfg;
  cfg.scheme = s;
  cfg.modulation = Modulation::pam4;
  cfg.K1 = cfg.K2 = {4};
  cfg.hidden = {8};
  cfg.batch_size = 64;
  cfg.steps = 60;
  cfg.lambda = 4.0;
  cfg.mc_samples = 20000;
  cfg.extraction.resolution_1d = 2000;
  cfg.seed = 17;
  return cfg;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ncf_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("same seed, same models and metrics") {
    const auto a = train(tiny()), b = train(tiny());
    REQUIRE_FALSE(a.failed);
    CHECK(a.models == b.models);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.metrics.mi_exact == b.metrics.mi_exact);
    CHECK(a.metrics.ser_mc == b.metrics.ser_mc);
    auto other = tiny();
    other.seed = 18;
    CHECK_FALSE(train(other).models == a.models);
  }

  TEST_CASE("temperature schedule is geometric") {
    const auto cfg = tiny();
    CHECK(cfg.temperature(0, 100) == doctest::Approx(1.0));
    CHECK(cfg.temperature(99, 100) == doctest::Approx(0.07));
    const double mid = cfg.temperature(33, 100) / cfg.temperature(32, 100);
    CHECK(cfg.temperature(80, 100) / cfg.temperature(79, 100) == doctest::Approx(mid));
  }

  TEST_CASE("encoder gain scales the initial logits and nothing else") {
    auto cfg = tiny();
    const auto base = init_distributed(cfg);
    cfg.encoder_gain = 0.1;
    const auto soft = init_distributed(cfg);
    Eigen::MatrixXd y(1, 3);
    y << -1.0, 0.2, 0.9;
    for (int r = 0; r < 2; ++r) {
      const auto& a = base.relays[r].encoders[0];
      const auto& b = soft.relays[r].encoders[0];
      CHECK((b.logits(y) - 0.1 * a.logits(y)).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK(soft.demod.net.layer(0).weight == base.demod.net.layer(0).weight);
    cfg.tau_start = 10.0;
    CHECK(cfg.temperature(0, 100) == doctest::Approx(10.0));
    CHECK(cfg.temperature(99, 100) == doctest::Approx(0.07));
    cfg.encoder_gain = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("p2p keeps the pretrained quantizer bit for bit at both relays") {
    const auto rec = train(tiny(Scheme::p2p));
    REQUIRE_FALSE(rec.failed);
    REQUIRE(rec.pretrained.has_value());
    const auto& pre = rec.pretrained->relays[0];
    for (const auto& relay : rec.models.relays) {
      CHECK(relay.encoders[0].net == pre.encoders[0].net);
      CHECK(relay.entropy[0].logits == pre.entropy[0].logits);
    }
    CHECK(rec.metrics.rate1 == rec.metrics.rate2);
  }

  TEST_CASE("metrics respect the information inequalities") {
    for (auto s : {Scheme::distributed, Scheme::p2p}) {
      const auto rec = train(tiny(s));
      const auto& m = rec.metrics;
      CHECK(m.entropy1 <= m.rate1 + 1e-9);
      CHECK(m.entropy2 <= m.rate2 + 1e-9);
      CHECK(m.mi_lower_bound <= m.mi_exact + 1e-9);
      CHECK(m.mi_exact <= m.entropy1 + m.entropy2 + 1e-9);
      CHECK(m.mi_exact <= m.mi_two_obs + 1e-9);
      CHECK(m.mi_exact <= m.cut_set + 1e-6);
      CHECK(m.ser_map_exact <= m.ser_demod_exact + 1e-12);
      CHECK(m.rate == doctest::Approx((m.rate1 + m.rate2) / 2));
    }
  }

  TEST_CASE("a single-index second relay is the single-relay system") {
    const auto c = Constellation::build(Modulation::pam4, 1.0);
    const auto part = extract_partition(test::nearest_level(c.levels()), -5, 5, 2000);
    RelayPartition rp;
    rp.components = {part};
    rp.offsets = {0};
    RelayPartition silent;
    silent.components.push_back(extract_partition(test::constant_encoder(1), -5, 5, 100));
    silent.offsets = {0};
    const auto cond = relay_conditionals(rp, c, 0.1);
    const auto a = exact_metrics(cond, silent_conditionals(c), c);
    const auto b = exact_metrics(cond, relay_conditionals(silent, c, 0.1), c);
    CHECK(a.mutual_information == b.mutual_information);
    CHECK(a.map_ser == b.map_ser);
    CHECK(a.mutual_information == doctest::Approx(a.entropy1 - 0.0).epsilon(0.2));
  }

  TEST_CASE("single relay run") {
    const auto rec = train_single_relay(tiny());
    REQUIRE_FALSE(rec.failed);
    CHECK(rec.models.relays.size() == 1);
    CHECK(rec.metrics.rate2 == 0.0);
    CHECK(rec.metrics.mi_exact <= rec.metrics.entropy1 + 1e-9);
  }

  TEST_CASE("invalid configs") {
    auto cfg = tiny();
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny();
    cfg.iq_mode = IqMode::split;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny();
    cfg.K1 = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("upper hull dominates every point and interpolates linearly") {
    const std::vector<std::pair<double, double>> pts{{0.0, 0.0}, {0.5, 0.2}, {1.0, 0.9}, {1.5, 1.0},
                                                     {2.0, 1.6}, {2.5, 1.5}, {3.0, 1.7}};
    const auto idx = upper_hull(pts);
    std::vector<std::pair<double, double>> hull;
    for (auto i : idx) hull.push_back(pts[i]);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == 6);
    for (std::size_t i = 1; i < hull.size(); ++i) CHECK(hull[i].second >= hull[i - 1].second);
    for (const auto& [r, mi] : pts) CHECK(*interpolate(hull, r) >= mi - 1e-12);
    CHECK(*interpolate(hull, 0.5) == doctest::Approx(0.45));
    CHECK_FALSE(interpolate(hull, 3.5).has_value());
  }

  TEST_CASE("one-element sweep selects its only run") {
    SweepOptions opt;
    opt.restarts = 1;
    opt.master_seed = 5;
    const auto out = sweep({tiny()}, opt);
    REQUIRE(out.size() == 1);
    CHECK(out[0].selected);
    CHECK(out[0].on_hull);
    CHECK(out[0].config.seed == derived_seed(opt, 0, 0));
  }

  TEST_CASE("sweep picks the lowest exact loss and is independent of workers") {
    SweepOptions opt;
    opt.restarts = 2;
    auto a = tiny(), b = tiny();
    b.lambda = 8.0;
    const auto one = sweep({a, b}, opt);
    opt.workers = 2;
    const auto two = sweep({a, b}, opt);
    REQUIRE(one.size() == 4);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one[i].models == two[i].models);
      CHECK(one[i].selected == two[i].selected);
    }
    for (const auto& r : one) {
      if (!r.selected) continue;
      for (const auto& o : one)
        if (o.config.lambda == r.config.lambda) CHECK(r.metrics.loss_exact <= o.metrics.loss_exact);
    }
  }
}

TEST_SUITE("record_io") {
  TEST_CASE("config json round trip and unknown keys") {
    auto cfg = tiny(Scheme::p2p);
    cfg.modulation = Modulation::qam16;
    cfg.iq_mode = IqMode::split;
    cfg.K1 = {3, 5};
    cfg.encoder_gain = 0.25;
    const auto back = train_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK_THROWS_AS(train_config_from_json(Json{{"lamda", 2.0}}), ConfigError);
    CHECK(train_config_from_json(Json{{"K", 8}}).K2 == std::vector<int>{8});
  }

  TEST_CASE("records survive a save and load") {
    const auto dir = scratch("record");
    for (auto s : {Scheme::distributed, Scheme::p2p}) {
      const auto rec = train(tiny(s));
      const auto path = save_record(dir, rec);
      const auto back = load_record(path);
      CHECK(back.models == rec.models);
      CHECK(back.pretrained.has_value() == (s == Scheme::p2p));
      CHECK(to_json(back.metrics) == to_json(rec.metrics));
      CHECK(to_json(back.config) == to_json(rec.config));
      CHECK(path.filename().string().rfind(std::string(to_string(s)) + "_4pam", 0) == 0);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("corrupt blobs are rejected") {
    std::stringstream ss("NOTAMODELFILE");
    CHECK_THROWS(read_models(ss));
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("spec validation") {
    CHECK_THROWS_AS(parse_experiment(Json::parse(R"({"name":"x","lambdas":[],"variants":[{"label":"a"}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment(Json::parse(R"({"name":"x","bogus":1})")), ConfigError);
    const auto s = parse_experiment(Json::parse(
        R"({"name":"x","base":{"modulation":"bpsk","K":4},"lambdas":[1,2],
            "variants":[{"label":"a"},{"label":"b","config":{"scheme":"p2p"},"lambdas":[3]}]})"));
    REQUIRE(s.variants.size() == 2);
    CHECK(s.variants[0].lambdas == std::vector<double>{1, 2});
    CHECK(s.variants[1].config.scheme == Scheme::p2p);
    CHECK(s.variants[1].config.modulation == Modulation::bpsk);
  }

  TEST_CASE("results csv is byte-identical across repeats and worker counts") {
    auto spec = parse_experiment(Json::parse(R"({"name":"det","restarts":2,"seed":3,
        "base":{"modulation":"bpsk","K":4,"hidden":[8],"batch_size":64,"steps":40,"mc_samples":10000,
                "resolution_1d":1000},
        "lambdas":[2,6],"variants":[{"label":"dist"},{"label":"p2p","config":{"scheme":"p2p"}}],
        "bounds":[{"modulation":"bpsk","snr1_db":10,"snr2_db":10,"rates":[0.5,1]}]})"));
    spec.out = scratch("det1");
    run_experiment(spec, 1);
    const auto first = slurp(spec.out / "results.csv");
    const auto bounds = slurp(spec.out / "bounds.csv");
    spec.out = scratch("det2");
    run_experiment(spec, 2);
    CHECK(first == slurp(spec.out / "results.csv"));
    CHECK(bounds == slurp(spec.out / "bounds.csv"));
    CHECK(first.rfind("scheme,modulation,iq_mode,gamma1_dB", 0) == 0);
    CHECK(fs::exists(spec.out / "manifest.json"));
    CHECK(fs::exists(spec.out / "curves_mi.svg"));
    fs::remove_all(spec.out);
    fs::remove_all(scratch("det1"));
  }

  TEST_CASE("region tilings") {
    Rng rng(3);
    RunRecord rec;
    rec.config.modulation = Modulation::bpsk;
    rec.config.K1 = rec.config.K2 = {2};
    rec.models = test::system_of(test::relay_of(test::sign_quantizer()), test::relay_of(test::sign_quantizer()), 2,
                                 {4}, rng);
    auto reg = export_regions(rec, 2000);
    CHECK(reg.plane.size() == 4);
    CHECK(reg.max_pair_components == 1);
    CHECK(reg.plane_svg.find("<svg") != std::string::npos);

    rec.config.K1 = rec.config.K2 = {3};
    rec.models = test::system_of(test::relay_of(test::constant_encoder(3)),
                                 test::relay_of(test::constant_encoder(3)), 2, {4}, rng);
    reg = export_regions(rec, 2000);
    CHECK(reg.plane.size() == 1);
  }

  TEST_CASE("overlay csv") {
    const auto dir = scratch("overlay");
    std::ofstream(dir / "o.csv") << "R,bits\n0.5,0.4\n1.0,0.8\n";
    const auto o = read_overlay(dir / "o.csv");
    CHECK(o.points.size() == 2);
    CHECK(o.points[1].second == 0.8);
    fs::remove_all(dir);
  }
}
