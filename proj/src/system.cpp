#include "ncf/system.hpp"

#include <cmath>

#include "ncf/prob.hpp"

namespace ncf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// digits[u][c] = index of component c inside composite index u.
std::vector<std::vector<int>> digit_table(const RelayCodec& relay) {
  const int n = relay.composite_size();
  std::vector<std::vector<int>> out(n);
  for (int u = 0; u < n; ++u) out[u] = relay.decompose(u);
  return out;
}

MatrixXd compose(const std::vector<MatrixXd>& comp, const std::vector<std::vector<int>>& digits) {
  if (comp.size() == 1) return comp.front();
  const auto cols = comp.front().cols();
  MatrixXd out(static_cast<Eigen::Index>(digits.size()), cols);
  for (std::size_t u = 0; u < digits.size(); ++u) {
    auto row = out.row(static_cast<Eigen::Index>(u));
    row = comp[0].row(digits[u][0]);
    for (std::size_t c = 1; c < comp.size(); ++c) row.array() *= comp[c].row(digits[u][c]).array();
  }
  return out;
}

/// Chain rule through the product composition; accumulates into gcomp.
void compose_backward(const std::vector<MatrixXd>& comp, const std::vector<std::vector<int>>& digits,
                      const MatrixXd& g, std::vector<MatrixXd>& gcomp) {
  if (comp.size() == 1) {
    gcomp[0] += g;
    return;
  }
  for (std::size_t u = 0; u < digits.size(); ++u) {
    for (std::size_t c = 0; c < comp.size(); ++c) {
      Eigen::ArrayXXd others = g.row(static_cast<Eigen::Index>(u)).array();
      for (std::size_t o = 0; o < comp.size(); ++o)
        if (o != c) others *= comp[o].row(digits[u][o]).array();
      gcomp[c].row(digits[u][c]).array() += others;
    }
  }
}

/// P = softmax(Z / tau) column-wise; returns dL/dZ from dL/dP.
MatrixXd softmax_backward(const MatrixXd& p, const MatrixXd& gp, double temperature) {
  const Eigen::RowVectorXd inner = (p.array() * gp.array()).colwise().sum();
  MatrixXd out = p.array() * (gp.rowwise() - inner).array();
  return out / temperature;
}

MatrixXd code_length_columns(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index m = 0; m < logits.cols(); ++m) out.col(m) = neg_log2_softmax(logits.col(m));
  return out;
}

}  // namespace

void SystemModels::validate() const {
  if (relays.empty() || relays.size() > 2) throw ConfigError("system needs one or two relays");
  if (demod.relay_count() != static_cast<int>(relays.size())) throw ConfigError("demodulator relay count mismatch");
  for (std::size_t r = 0; r < relays.size(); ++r) {
    const auto& relay = relays[r];
    if (relay.encoders.empty() || relay.encoders.size() != relay.entropy.size())
      throw ConfigError("relay needs one entropy model per encoder");
    if (relay.component_sizes() != demod.relay_components[r])
      throw ConfigError("demodulator input layout differs from relay alphabets");
    for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
      if (relay.entropy[c].size() != relay.encoders[c].K) throw ConfigError("entropy model size mismatch");
      if (relay.encoders[c].net.output_width() != relay.encoders[c].K)
        throw ConfigError("encoder output width differs from K");
    }
  }
}

bool SystemModels::operator==(const SystemModels& other) const {
  if (relays.size() != other.relays.size()) return false;
  for (std::size_t r = 0; r < relays.size(); ++r) {
    const auto& a = relays[r];
    const auto& b = other.relays[r];
    if (a.encoders.size() != b.encoders.size()) return false;
    for (std::size_t c = 0; c < a.encoders.size(); ++c) {
      if (!(a.encoders[c].net == b.encoders[c].net)) return false;
      if (a.entropy[c].logits != b.entropy[c].logits) return false;
    }
  }
  return demod.net == other.demod.net;
}

SystemGradient SystemGradient::zeros_like(const SystemModels& models) {
  SystemGradient g;
  for (const auto& relay : models.relays) {
    g.encoders.emplace_back();
    g.entropy.emplace_back();
    for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
      g.encoders.back().push_back(relay.encoders[c].net.zero_gradient());
      g.entropy.back().push_back(VectorXd::Zero(relay.entropy[c].size()));
    }
  }
  g.demod = models.demod.net.zero_gradient();
  return g;
}

void SystemGradient::set_zero() {
  for (auto& r : encoders)
    for (auto& e : r) e.set_zero();
  for (auto& r : entropy)
    for (auto& e : r) e.setZero();
  demod.set_zero();
}

LossValue evaluate_loss(const SystemModels& models, const Batch& batch, const LossOptions& opt,
                        SystemGradient* grad) {
  models.validate();
  const int n = batch.size();
  if (n == 0) throw ArgumentError("empty batch");
  if (!(opt.lambda > 0.0)) throw ConfigError("lambda must be positive");
  const int relays = static_cast<int>(models.relays.size());
  const int symbols = models.demod.num_symbols;
  const bool relay_grads = grad && opt.train_relays;

  // Encoders.
  std::vector<std::vector<ChunkedTape>> tapes(relays);
  std::vector<std::vector<MatrixXd>> probs(relays);
  std::vector<std::vector<std::vector<int>>> digits(relays);
  std::array<MatrixXd, 2> composite;
  for (int r = 0; r < relays; ++r) {
    const auto& relay = models.relays[r];
    tapes[r].resize(relay.encoders.size());
    for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
      const auto& enc = relay.encoders[c];
      const MatrixXd z = forward_chunked(enc.net, enc.features(batch.y[r]), opt.chunk,
                                         relay_grads ? &tapes[r][c] : nullptr);
      probs[r].push_back(softmax_columns(z, opt.temperature));
    }
    digits[r] = digit_table(relay);
    composite[r] = compose(probs[r], digits[r]);
  }
  if (relays == 1) composite[1] = MatrixXd::Ones(1, n);

  // Demodulator over all composite pairs.
  ChunkedTape demod_tape;
  const MatrixXd demod_logits =
      forward_chunked(models.demod.net, models.demod.all_pair_inputs_sparse(), opt.chunk, grad ? &demod_tape : nullptr);
  const MatrixXd code_length = code_length_columns(demod_logits);
  const int u1n = static_cast<int>(composite[0].rows());
  const int u2n = static_cast<int>(composite[1].rows());

  std::array<MatrixXd, 2> g_composite;
  if (relay_grads)
    for (int r = 0; r < relays; ++r) g_composite[r] = MatrixXd::Zero(composite[r].rows(), n);
  MatrixXd g_code_length;
  if (grad) g_code_length = MatrixXd::Zero(symbols, code_length.cols());

  std::vector<std::vector<int>> groups(symbols);
  for (int i = 0; i < n; ++i) groups.at(batch.symbols[i]).push_back(i);

  const double scale = opt.lambda / n;
  double distortion_sum = 0.0;
  for (int w = 0; w < symbols; ++w) {
    const auto& idx = groups[w];
    if (idx.empty()) continue;
    const auto nw = static_cast<Eigen::Index>(idx.size());
    MatrixXd p1(u1n, nw), p2(u2n, nw);
    for (Eigen::Index k = 0; k < nw; ++k) {
      p1.col(k) = composite[0].col(idx[k]);
      p2.col(k) = composite[1].col(idx[k]);
    }
    // Pair m = u1 * U2 + u2, so row w viewed column-major as U2 x U1 is L_w^T.
    const Eigen::Map<const MatrixXd, 0, Eigen::InnerStride<>> lw_t(code_length.data() + w, u2n, u1n,
                                                                   Eigen::InnerStride<>(symbols));
    const MatrixXd v = lw_t.transpose() * p2;  // U1 x nw
    distortion_sum += (p1.array() * v.array()).sum();
    if (relay_grads) {
      const MatrixXd v2 = lw_t * p1;  // U2 x nw
      for (Eigen::Index k = 0; k < nw; ++k) {
        g_composite[0].col(idx[k]) = v.col(k) * scale;
        if (relays == 2) g_composite[1].col(idx[k]) = v2.col(k) * scale;
      }
    }
    if (grad) {
      const MatrixXd a = p2 * p1.transpose() * scale;  // U2 x U1 == pair layout of row w
      Eigen::Map<MatrixXd, 0, Eigen::InnerStride<>> gw(g_code_length.data() + w, u2n, u1n,
                                                      Eigen::InnerStride<>(symbols));
      gw += a;
    }
  }

  LossValue out;
  out.distortion = distortion_sum / n;

  std::vector<std::vector<MatrixXd>> g_probs(relays);
  for (int r = 0; r < relays; ++r) {
    const auto& relay = models.relays[r];
    for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
      const VectorXd len = relay.entropy[c].code_lengths();
      const VectorXd mean_p = probs[r][c].rowwise().mean();
      out.rate[r] += len.dot(mean_p);
      if (relay_grads) {
        g_probs[r].push_back(len.replicate(1, n) / n);
        grad->entropy[r][c] += (relay.entropy[c].probabilities() - mean_p) / kLn2;
      }
    }
  }
  out.total = out.rate[0] + out.rate[1] + opt.lambda * out.distortion;
  if (!grad) return out;

  if (relay_grads) {
    for (int r = 0; r < relays; ++r) {
      const auto& relay = models.relays[r];
      compose_backward(probs[r], digits[r], g_composite[r], g_probs[r]);
      for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
        const MatrixXd gz = softmax_backward(probs[r][c], g_probs[r][c], opt.temperature);
        backward_chunked(relay.encoders[c].net, tapes[r][c], gz, grad->encoders[r][c]);
      }
    }
  }

  // d(-log2 softmax_w)/dz_j = (p_j - [j == w]) / ln 2.
  const MatrixXd demod_p = softmax_columns(demod_logits);
  const Eigen::RowVectorXd col_sum = g_code_length.colwise().sum();
  const MatrixXd gz = (demod_p.array().rowwise() * col_sum.array() - g_code_length.array()) / kLn2;
  backward_chunked(models.demod.net, demod_tape, gz, grad->demod);
  return out;
}

namespace reference {

LossValue evaluate_loss(const SystemModels& models, const Batch& batch, const LossOptions& opt,
                        SystemGradient* grad) {
  models.validate();
  const int n = batch.size();
  if (n == 0) throw ArgumentError("empty batch");
  const int relays = static_cast<int>(models.relays.size());
  const int symbols = models.demod.num_symbols;
  const bool relay_grads = grad && opt.train_relays;
  const auto& dem = models.demod;
  const int u2n = dem.composite_size(1);
  const int pairs = dem.pair_count();

  // Demodulator table, one plain forward per pair.
  std::vector<std::vector<std::vector<double>>> d_act(pairs), d_pre(pairs);
  std::vector<std::vector<double>> d_prob(pairs), d_len(pairs);
  for (int m = 0; m < pairs; ++m) {
    const VectorXd in = dem.pair_input(m / u2n, m % u2n);
    const auto z = ncf::reference::forward(dem.net, std::span<const double>(in.data(), in.size()), &d_act[m], &d_pre[m]);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    for (double v : z) {
      d_prob[m].push_back(std::exp(v - mx) / s);
      d_len[m].push_back((mx + std::log(s) - v) / kLn2);
    }
  }
  std::vector<std::vector<double>> g_len(pairs, std::vector<double>(symbols, 0.0));

  LossValue out;
  std::vector<std::vector<std::vector<double>>> mean_p(relays);
  std::vector<std::vector<VectorXd>> lengths(relays);
  for (int r = 0; r < relays; ++r)
    for (const auto& ent : models.relays[r].entropy) {
      lengths[r].push_back(ent.code_lengths());
      mean_p[r].emplace_back(ent.size(), 0.0);
    }

  const double scale = opt.lambda / n;
  double distortion_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int w = batch.symbols[i];
    std::vector<std::vector<std::vector<std::vector<double>>>> act(relays), pre(relays);
    std::vector<std::vector<std::vector<double>>> p(relays);
    std::array<std::vector<double>, 2> comp;
    for (int r = 0; r < relays; ++r) {
      const auto& relay = models.relays[r];
      act[r].resize(relay.encoders.size());
      pre[r].resize(relay.encoders.size());
      for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
        const auto& enc = relay.encoders[c];
        std::vector<double> x(enc.input_width);
        for (int k = 0; k < enc.input_width; ++k) x[k] = batch.y[r](enc.input_offset + k, i) / enc.input_scale;
        const auto z = ncf::reference::forward(enc.net, x, &act[r][c], &pre[r][c]);
        double mx = z[0];
        for (double v : z) mx = std::max(mx, v);
        std::vector<double> e(z.size());
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += (e[k] = std::exp((z[k] - mx) / opt.temperature));
        for (auto& v : e) v /= s;
        p[r].push_back(std::move(e));
      }
      const int un = relay.composite_size();
      comp[r].assign(un, 1.0);
      for (int u = 0; u < un; ++u) {
        const auto dg = relay.decompose(u);
        for (std::size_t c = 0; c < dg.size(); ++c) comp[r][u] *= p[r][c][dg[c]];
      }
    }
    if (relays == 1) comp[1] = {1.0};

    std::array<std::vector<double>, 2> g_comp{std::vector<double>(comp[0].size(), 0.0),
                                              std::vector<double>(comp[1].size(), 0.0)};
    for (std::size_t u1 = 0; u1 < comp[0].size(); ++u1)
      for (std::size_t u2 = 0; u2 < comp[1].size(); ++u2) {
        const int m = static_cast<int>(u1) * u2n + static_cast<int>(u2);
        const double len = d_len[m][w];
        distortion_sum += comp[0][u1] * comp[1][u2] * len;
        g_comp[0][u1] += scale * comp[1][u2] * len;
        g_comp[1][u2] += scale * comp[0][u1] * len;
        if (grad) g_len[m][w] += scale * comp[0][u1] * comp[1][u2];
      }

    for (int r = 0; r < relays; ++r) {
      const auto& relay = models.relays[r];
      for (std::size_t c = 0; c < relay.encoders.size(); ++c)
        for (int u = 0; u < relay.encoders[c].K; ++u) {
          out.rate[r] += p[r][c][u] * lengths[r][c][u] / n;
          mean_p[r][c][u] += p[r][c][u] / n;
        }
      if (!relay_grads) continue;
      std::vector<std::vector<double>> gp(relay.encoders.size());
      for (std::size_t c = 0; c < relay.encoders.size(); ++c)
        for (int u = 0; u < relay.encoders[c].K; ++u) gp[c].push_back(lengths[r][c][u] / n);
      for (int u = 0; u < relay.composite_size(); ++u) {
        const auto dg = relay.decompose(u);
        for (std::size_t c = 0; c < dg.size(); ++c) {
          double others = g_comp[r][u];
          for (std::size_t o = 0; o < dg.size(); ++o)
            if (o != c) others *= p[r][o][dg[o]];
          gp[c][dg[c]] += others;
        }
      }
      for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
        double inner = 0.0;
        for (int u = 0; u < relay.encoders[c].K; ++u) inner += p[r][c][u] * gp[c][u];
        std::vector<double> gz(relay.encoders[c].K);
        for (int u = 0; u < relay.encoders[c].K; ++u) gz[u] = p[r][c][u] * (gp[c][u] - inner) / opt.temperature;
        ncf::reference::backward(relay.encoders[c].net, act[r][c], pre[r][c], gz, grad->encoders[r][c]);
      }
    }
  }
  out.distortion = distortion_sum / n;
  out.total = out.rate[0] + out.rate[1] + opt.lambda * out.distortion;
  if (!grad) return out;

  if (relay_grads)
    for (int r = 0; r < relays; ++r) {
      const auto& relay = models.relays[r];
      for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
        const VectorXd q = relay.entropy[c].probabilities();
        for (int u = 0; u < relay.encoders[c].K; ++u) grad->entropy[r][c][u] += (q[u] - mean_p[r][c][u]) / kLn2;
      }
    }
  for (int m = 0; m < pairs; ++m) {
    double s = 0.0;
    for (double v : g_len[m]) s += v;
    std::vector<double> gz(symbols);
    for (int j = 0; j < symbols; ++j) gz[j] = (d_prob[m][j] * s - g_len[m][j]) / kLn2;
    ncf::reference::backward(dem.net, d_act[m], d_pre[m], gz, grad->demod);
  }
  return out;
}

}  // namespace reference

std::vector<std::span<double>> parameter_blocks(SystemModels& models, bool relays, bool demod) {
  std::vector<std::span<double>> out;
  if (relays)
    for (auto& relay : models.relays) {
      for (auto& enc : relay.encoders) {
        auto b = enc.net.parameter_blocks();
        out.insert(out.end(), b.begin(), b.end());
      }
      for (auto& ent : relay.entropy) out.emplace_back(ent.logits.data(), static_cast<std::size_t>(ent.logits.size()));
    }
  if (demod) {
    auto b = models.demod.net.parameter_blocks();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<std::span<double>> gradient_blocks(SystemGradient& grad, bool relays, bool demod) {
  std::vector<std::span<double>> out;
  if (relays)
    for (std::size_t r = 0; r < grad.encoders.size(); ++r) {
      for (auto& g : grad.encoders[r]) {
        auto b = g.blocks();
        out.insert(out.end(), b.begin(), b.end());
      }
      for (auto& e : grad.entropy[r]) out.emplace_back(e.data(), static_cast<std::size_t>(e.size()));
    }
  if (demod) {
    auto b = grad.demod.blocks();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

}  // namespace ncf
