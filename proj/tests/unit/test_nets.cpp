#include <cmath>
#include <vector>

#include "doctest.h"

#include "helpers.hpp"
#include "ncf/adam.hpp"
#include "ncf/demodulator.hpp"
#include "ncf/dense_net.hpp"
#include "ncf/prob.hpp"
#include "ncf/relay_codec.hpp"

using namespace ncf;

namespace {

// sum_i c_i * out_i with fixed weights, so the upstream gradient is c.
double probe(const DenseNet& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  return (net.forward(x).array() * c.array()).sum();
}

}  // namespace

TEST_SUITE("dense_net") {
  TEST_CASE("affine layer arithmetic") {
    const auto net = test::affine(1, 1, {2.0}, {1.0});
    Eigen::MatrixXd x(1, 1);
    x << 3.0;
    CHECK(net.forward(x)(0, 0) == 7.0);
  }

  TEST_CASE("zero network outputs zero") {
    const int widths[] = {3, 8, 5};
    const auto net = DenseNet::zeros(widths);
    CHECK(net.forward(Eigen::MatrixXd::Random(3, 4)).isZero(0.0));
  }

  TEST_CASE("leaky relu") {
    CHECK(leaky_relu(-1.0) == doctest::Approx(-0.01));
    CHECK(leaky_relu(2.0) == 2.0);
  }

  TEST_CASE("backward matches central differences") {
    Rng rng(7);
    const int widths[] = {3, 16, 16, 4};
    auto net = DenseNet::he_init(widths, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 9);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Random(4, 9);
    Tape tape;
    net.forward(x, &tape);
    auto grad = net.zero_gradient();
    Eigen::MatrixXd gx;
    net.backward(tape, c, grad, &gx);
    const auto g = grad.blocks();
    auto params = net.parameter_blocks();
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t i = 0; i < params[b].size(); i += 3) {
        const double keep = params[b][i];
        params[b][i] = keep + h;
        const double up = probe(net, x, c);
        params[b][i] = keep - h;
        const double dn = probe(net, x, c);
        params[b][i] = keep;
        const double fd = (up - dn) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[b][i]) / std::max({std::abs(fd), std::abs(g[b][i]), 1e-3}));
      }
    CHECK(worst < 1e-5);
    // Input gradient.
    Eigen::MatrixXd xp = x;
    xp(1, 2) += h;
    Eigen::MatrixXd xm = x;
    xm(1, 2) -= h;
    CHECK(gx(1, 2) == doctest::Approx((probe(net, xp, c) - probe(net, xm, c)) / (2 * h)).epsilon(1e-5));
  }

  TEST_CASE("batched, chunked, sparse and reference paths agree") {
    Rng rng(3);
    const int widths[] = {6, 12, 5};
    const auto net = DenseNet::he_init(widths, rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 10);
    for (int n = 0; n < 10; ++n) x(n % 6, n) = 1.0;
    const SparseInput xs = x.sparseView();
    const Eigen::MatrixXd a = net.forward(x);
    CHECK((net.forward(xs) - a).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((forward_chunked(net, x, 3) - a).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((forward_chunked(net, xs, 4) - a).cwiseAbs().maxCoeff() < 1e-13);
    for (int n = 0; n < 10; ++n) {
      std::vector<double> col(x.col(n).data(), x.col(n).data() + 6);
      const auto r = reference::forward(net, col);
      for (int k = 0; k < 5; ++k) CHECK(r[k] == doctest::Approx(a(k, n)).epsilon(1e-12));
    }

    const Eigen::MatrixXd c = Eigen::MatrixXd::Random(5, 10);
    Tape t1, t2;
    net.forward(x, &t1);
    net.forward(xs, &t2);
    auto g1 = net.zero_gradient(), g2 = net.zero_gradient(), g3 = net.zero_gradient(), g4 = net.zero_gradient();
    net.backward(t1, c, g1);
    net.backward(t2, c, g2);
    ChunkedTape ct;
    forward_chunked(net, x, 3, &ct);
    backward_chunked(net, ct, c, g3);
    for (int n = 0; n < 10; ++n) {
      std::vector<double> col(x.col(n).data(), x.col(n).data() + 6);
      std::vector<std::vector<double>> act, pre;
      reference::forward(net, col, &act, &pre);
      std::vector<double> gc(c.col(n).data(), c.col(n).data() + 5);
      reference::backward(net, act, pre, gc, g4);
    }
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      CHECK((g1.weight[l] - g2.weight[l]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((g1.weight[l] - g3.weight[l]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((g1.weight[l] - g4.weight[l]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((g1.bias[l] - g4.bias[l]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("stale tapes are rejected") {
    Rng rng(1);
    const int widths[] = {2, 4, 2};
    auto net = DenseNet::he_init(widths, rng);
    Tape t;
    net.forward(Eigen::MatrixXd::Ones(2, 1), &t);
    net.touch();
    auto g = net.zero_gradient();
    CHECK_THROWS_AS(net.backward(t, Eigen::MatrixXd::Ones(2, 1), g), InternalError);
  }

  TEST_CASE("binary round trip") {
    Rng rng(5);
    const int widths[] = {2, 7, 3};
    const auto net = DenseNet::he_init(widths, rng);
    std::stringstream ss;
    write_net(ss, net);
    CHECK(read_net(ss) == net);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step moves each coordinate by the learning rate against the gradient sign") {
    std::vector<double> p{1.0, -2.0, 0.5};
    std::vector<double> g{0.3, -4.0, 1e-3};
    const std::size_t sizes[] = {3};
    AdamState st(AdamConfig{0.1, 0.9, 0.999, 1e-12}, sizes);
    std::vector<std::span<double>> ps{p}, gs{g};
    st.step(ps, gs);
    CHECK(p[0] == doctest::Approx(0.9));
    CHECK(p[1] == doctest::Approx(-1.9));
    CHECK(p[2] == doctest::Approx(0.4));
  }

  TEST_CASE("descends a quadratic") {
    std::vector<double> p{3.0, -5.0}, g(2);
    const std::size_t sizes[] = {2};
    AdamState st(AdamConfig{0.05}, sizes);
    std::vector<std::span<double>> ps{p}, gs{g};
    for (int i = 0; i < 2000; ++i) {
      g[0] = 2 * (p[0] - 1.0);
      g[1] = 2 * (p[1] + 0.5);
      st.step(ps, gs);
    }
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(-0.5).epsilon(1e-3));
  }

  TEST_CASE("non-finite gradient leaves parameters untouched") {
    std::vector<double> p{1.0}, g{NAN};
    const std::size_t sizes[] = {1};
    AdamState st(AdamConfig{}, sizes);
    std::vector<std::span<double>> ps{p}, gs{g};
    CHECK_THROWS_AS(st.step(ps, gs), DivergenceError);
    CHECK(p[0] == 1.0);
  }
}

TEST_SUITE("prob") {
  TEST_CASE("softmax and code lengths") {
    Eigen::VectorXd z(3);
    z << 1000.0, 1000.0, 1000.0;
    CHECK(softmax(z).isApprox(Eigen::VectorXd::Constant(3, 1.0 / 3)));
    const auto len = neg_log2_softmax(z);
    CHECK(len[0] == doctest::Approx(std::log2(3.0)));
    Eigen::VectorXd y(2);
    y << 0.0, 1.0;
    CHECK(softmax(y, 0.5)[1] == doctest::Approx(std::exp(2.0) / (1 + std::exp(2.0))));
    CHECK_THROWS_AS(softmax(y, 0.0), ArgumentError);
  }

  TEST_CASE("argmax ties go to the lowest index") {
    const double v[] = {0.1, 0.7, 0.7, 0.2};
    CHECK(argmax_lowest(v) == 1);
  }

  TEST_CASE("entropy") {
    const double u[] = {0.25, 0.25, 0.25, 0.25};
    CHECK(entropy_bits(u) == doctest::Approx(2.0));
    const double d[] = {1.0, 0.0};
    CHECK(entropy_bits(d) == 0.0);
  }
}

TEST_SUITE("relay_codec") {
  TEST_CASE("uniform entropy model costs log2 K bits") {
    EntropyModel q(4);
    CHECK(q.code_lengths().isApprox(Eigen::VectorXd::Constant(4, 2.0)));
    const auto enc = test::nearest_level({-1, -0.3, 0.3, 1});
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(1, 50);
    CHECK(rate_term(enc, q, y, 0.3) == doctest::Approx(2.0));
    CHECK(rate_term_hard(enc, q, y) == doctest::Approx(2.0));
  }

  TEST_CASE("hard encoding is the argmax with ties to the lowest index") {
    const auto enc = test::sign_quantizer();
    const double pos[] = {0.4}, neg[] = {-0.4}, zero[] = {0.0};
    CHECK(encode_hard(enc, pos) == 1);
    CHECK(encode_hard(enc, neg) == 0);
    CHECK(encode_hard(enc, zero) == 0);
    CHECK(encode_hard(test::constant_encoder(5), pos) == 0);
  }

  TEST_CASE("soft encoding sharpens as the temperature falls") {
    const auto enc = test::nearest_level({-1, 1});
    const double y[] = {0.2};
    CHECK(encode_soft(enc, y, 1.0)[1] < encode_soft(enc, y, 0.07)[1]);
    CHECK(encode_soft(enc, y, 0.01)[1] == doctest::Approx(1.0));
  }

  TEST_CASE("split codec composes indices first component most significant") {
    const auto c = Constellation::build(Modulation::qam16, 1.0);
    Rng rng(2);
    const int sizes[] = {3, 5};
    const int hidden[] = {8};
    const auto r = make_relay_codec(c, IqMode::split, sizes, 0.1, hidden, rng);
    REQUIRE(r.encoders.size() == 2);
    CHECK(r.encoders[1].input_offset == 1);
    CHECK(r.composite_size() == 15);
    CHECK(r.representation_width() == 8);
    const int comp[] = {2, 4};
    CHECK(r.compose(comp) == 14);
    CHECK(r.decompose(7) == std::vector<int>{1, 2});
    CHECK_THROWS(make_relay_codec(c, IqMode::none, sizes, 0.1, hidden, rng));
    CHECK(parse_iq_mode("joint") == IqMode::joint);
  }
}

TEST_SUITE("demodulator") {
  TEST_CASE("zero network predicts uniform symbols at log2|X| bits") {
    const int hidden[] = {16};
    const auto dem = DemodulatorModel::zeros({{4}, {4}}, 4, hidden);
    const auto t = pair_table(dem);
    CHECK(t.code_length.isApprox(Eigen::MatrixXd::Constant(4, 16, 2.0)));
    CHECK(demod_hard(dem, 2, 3) == 0);
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 3, 0.25);
    const int sym[] = {0, 1, 3};
    CHECK(distortion(dem, p, p, sym) == doctest::Approx(2.0));
  }

  TEST_CASE("pair inputs are concatenated one-hots") {
    Rng rng(1);
    const int hidden[] = {4};
    const auto dem = DemodulatorModel::create({{2, 3}, {4}}, 4, hidden, rng);
    CHECK(dem.composite_size(0) == 6);
    CHECK(dem.input_width() == 9);
    CHECK(dem.pair_count() == 24);
    const auto v = dem.pair_input(5, 2);  // components (1, 2) then 2
    Eigen::VectorXd want = Eigen::VectorXd::Zero(9);
    want[1] = want[2 + 2] = want[5 + 2] = 1.0;
    CHECK(v == want);
    const Eigen::MatrixXd all = dem.all_pair_inputs();
    CHECK(Eigen::MatrixXd(dem.all_pair_inputs_sparse()) == all);
    CHECK(all.col(5 * 4 + 2) == want);
  }

  TEST_CASE("single relay demodulator has one composite for the absent relay") {
    Rng rng(1);
    const int hidden[] = {4};
    const auto dem = DemodulatorModel::create({{8}}, 2, hidden, rng);
    CHECK(dem.composite_size(1) == 1);
    CHECK(dem.pair_count() == 8);
  }
}
