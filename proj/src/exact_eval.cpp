#include "ncf/exact_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ncf/prob.hpp"

namespace ncf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// P(lo < Z <= hi) for standard normal Z, accurate in both tails.
double interval_mass(double zlo, double zhi) {
  if (zlo >= 0.0) return 0.5 * (std::erfc(zlo / std::numbers::sqrt2) - std::erfc(zhi / std::numbers::sqrt2));
  return 0.5 * (std::erfc(-zhi / std::numbers::sqrt2) - std::erfc(-zlo / std::numbers::sqrt2));
}

/// Masses of the cells delimited by interior `edges` around x.
std::vector<double> cell_masses(const std::vector<double>& edges, double x, double sd) {
  std::vector<double> out(edges.size() + 1);
  double lo = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= edges.size(); ++i) {
    const double hi = i < edges.size() ? edges[i] : std::numeric_limits<double>::infinity();
    out[i] = interval_mass((lo - x) / sd, (hi - x) / sd);
    lo = hi;
  }
  return out;
}

QuantizerPartition partition_from_lattice(const std::vector<int>& lattice, const LabelFunction& label, int K,
                                          double lo, double hi, double tolerance) {
  const int res = static_cast<int>(lattice.size());
  const double h = (hi - lo) / (res - 1);
  QuantizerPartition part;
  part.dim = 1;
  part.K = K;
  part.labels.push_back(lattice.front());
  for (int i = 0; i + 1 < res; ++i) {
    if (lattice[i] == lattice[i + 1]) continue;
    double a = lo + i * h;
    double b = lo + (i + 1) * h;
    const int left = lattice[i];
    while (b - a > tolerance) {
      const double mid = 0.5 * (a + b);
      if (label(mid) == left)
        a = mid;
      else
        b = mid;
    }
    part.breakpoints.push_back(0.5 * (a + b));
    part.labels.push_back(lattice[i + 1]);
  }
  return part;
}

double coordinate_label_input(const EncoderModel& enc) {
  if (enc.input_width != 1) throw ArgumentError("1-D extraction needs a single-coordinate encoder");
  return 0.0;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

int QuantizerPartition::label_at(std::span<const double> y) const {
  if (dim == 1) {
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), y[0]);
    return labels[it - breakpoints.begin()];
  }
  const auto ix = std::lower_bound(edges_x.begin(), edges_x.end(), y[0]) - edges_x.begin();
  const auto iy = std::lower_bound(edges_y.begin(), edges_y.end(), y[1]) - edges_y.begin();
  return labels[ix * (edges_y.size() + 1) + iy];
}

int QuantizerPartition::max_runs_per_label() const {
  std::map<int, int> runs;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (i == 0 || labels[i] != labels[i - 1]) ++runs[labels[i]];
  int best = 0;
  for (const auto& [l, n] : runs) best = std::max(best, n);
  return best;
}

QuantizerPartition extract_partition(const LabelFunction& label, int K, double lo, double hi, int resolution,
                                     double tolerance) {
  if (!(lo < hi)) throw ArgumentError("extraction range must satisfy lo < hi");
  if (resolution < 2) throw ArgumentError("extraction resolution too small");
  std::vector<int> lattice(resolution);
  const double h = (hi - lo) / (resolution - 1);
  for (int i = 0; i < resolution; ++i) lattice[i] = label(lo + i * h);
  return partition_from_lattice(lattice, label, K, lo, hi, tolerance);
}

QuantizerPartition extract_partition(const EncoderModel& enc, double lo, double hi, int resolution,
                                     double tolerance) {
  coordinate_label_input(enc);
  if (!(lo < hi)) throw ArgumentError("extraction range must satisfy lo < hi");
  if (resolution < 2) throw ArgumentError("extraction resolution too small");
  const int width = enc.input_offset + 1;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(width, resolution);
  const double h = (hi - lo) / (resolution - 1);
  for (int i = 0; i < resolution; ++i) y(enc.input_offset, i) = lo + i * h;
  const auto lattice = encode_hard_batch(enc, y);
  const LabelFunction label = [&](double v) {
    double buf[2] = {0.0, 0.0};
    buf[enc.input_offset] = v;
    return encode_hard(enc, std::span<const double>(buf, width));
  };
  return partition_from_lattice(lattice, label, enc.K, lo, hi, tolerance);
}

QuantizerPartition extract_partition_2d(const EncoderModel& enc, double lo, double hi, int resolution) {
  if (enc.input_width != 2) throw ArgumentError("2-D extraction needs a joint-IQ encoder");
  if (!(lo < hi) || resolution < 2) throw ArgumentError("invalid 2-D extraction lattice");
  QuantizerPartition part;
  part.dim = 2;
  part.K = enc.K;
  const double h = (hi - lo) / resolution;
  for (int i = 1; i < resolution; ++i) {
    part.edges_x.push_back(lo + i * h);
    part.edges_y.push_back(lo + i * h);
  }
  part.labels.resize(static_cast<std::size_t>(resolution) * resolution);
  Eigen::MatrixXd row(2, resolution);
  for (int ix = 0; ix < resolution; ++ix) {
    for (int iy = 0; iy < resolution; ++iy) {
      row(0, iy) = lo + (ix + 0.5) * h;
      row(1, iy) = lo + (iy + 0.5) * h;
    }
    const auto labels = encode_hard_batch(enc, row);
    std::copy(labels.begin(), labels.end(), part.labels.begin() + static_cast<std::ptrdiff_t>(ix) * resolution);
  }
  return part;
}

PartitionFidelity check_partition(const QuantizerPartition& part, const LabelFunction& label, double lo, double hi,
                                  int points) {
  PartitionFidelity out;
  int agree = 0;
  const double h = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double v = lo + i * h;
    const double y[1] = {v};
    if (part.label_at(y) == label(v)) {
      ++agree;
      continue;
    }
    double dist = std::numeric_limits<double>::infinity();
    for (double b : part.breakpoints) dist = std::min(dist, std::abs(b - v));
    out.max_disagreement_distance = std::max(out.max_disagreement_distance, dist);
  }
  out.agreement = static_cast<double>(agree) / points;
  return out;
}

VectorXd cell_probs(const QuantizerPartition& part, std::span<const double> x, double variance_per_dim) {
  if (!(variance_per_dim > 0.0)) throw ArgumentError("noise variance must be positive");
  const double sd = std::sqrt(variance_per_dim);
  VectorXd p = VectorXd::Zero(part.K);
  if (part.dim == 1) {
    const auto m = cell_masses(part.breakpoints, x[0], sd);
    for (std::size_t i = 0; i < m.size(); ++i) p[part.labels[i]] += m[i];
    return p;
  }
  if (x.size() < 2) throw ArgumentError("2-D partition needs a 2-D point");
  const auto mx = cell_masses(part.edges_x, x[0], sd);
  const auto my = cell_masses(part.edges_y, x[1], sd);
  const std::size_t ny = my.size();
  for (std::size_t i = 0; i < mx.size(); ++i) {
    if (mx[i] == 0.0) continue;
    const int* row = part.labels.data() + i * ny;
    for (std::size_t j = 0; j < ny; ++j) p[row[j]] += mx[i] * my[j];
  }
  return p;
}

RelayPartition extract_relay(const RelayCodec& relay, double power, double noise_variance,
                             const ExtractionOptions& opt) {
  RelayPartition out;
  const double half = opt.range_sigmas * std::sqrt(power + noise_variance);
  for (const auto& enc : relay.encoders) {
    if (enc.input_width == 1)
      out.components.push_back(extract_partition(enc, -half, half, opt.resolution_1d));
    else
      out.components.push_back(extract_partition_2d(enc, -half, half, opt.resolution_2d));
    out.offsets.push_back(enc.input_offset);
  }
  return out;
}

RelayConditionals relay_conditionals(const RelayPartition& part, const Constellation& c, double noise_variance) {
  RelayConditionals out;
  const double per_dim = noise_variance / c.dim();
  for (std::size_t k = 0; k < part.components.size(); ++k) {
    const auto& comp = part.components[k];
    MatrixXd m(comp.K, c.size());
    for (int x = 0; x < c.size(); ++x) {
      const auto pt = c.point(x);
      m.col(x) = cell_probs(comp, pt.subspan(part.offsets[k], comp.dim), per_dim);
    }
    out.component.push_back(std::move(m));
  }
  if (out.component.size() == 1) {
    out.composite = out.component.front();
    return out;
  }
  int total = 1;
  for (const auto& m : out.component) total *= static_cast<int>(m.rows());
  out.composite = MatrixXd::Ones(total, c.size());
  for (int u = 0; u < total; ++u) {
    int rest = u;
    for (std::size_t k = out.component.size(); k-- > 0;) {
      const auto kk = out.component[k].rows();
      out.composite.row(u).array() *= out.component[k].row(rest % kk).array();
      rest /= static_cast<int>(kk);
    }
  }
  return out;
}

RelayConditionals silent_conditionals(const Constellation& c) {
  RelayConditionals out;
  out.component.push_back(MatrixXd::Ones(1, c.size()));
  out.composite = out.component.front();
  return out;
}

ExactMetrics exact_metrics(const RelayConditionals& r1, const RelayConditionals& r2, const Constellation& c) {
  const auto& a = r1.composite;
  const auto& b = r2.composite;
  const int m = c.size();
  const auto u1n = a.rows();
  const auto u2n = b.rows();
  const VectorXd prior = Eigen::Map<const VectorXd>(c.prior().data(), m);

  ExactMetrics out;
  const VectorXd m1 = a * prior;
  const VectorXd m2 = b * prior;
  out.entropy1 = entropy_bits(std::span<const double>(m1.data(), m1.size()));
  out.entropy2 = entropy_bits(std::span<const double>(m2.data(), m2.size()));

  const MatrixXd joint = a * prior.asDiagonal() * b.transpose();  // U1 x U2
  double h12 = 0.0;
  for (Eigen::Index i = 0; i < joint.size(); ++i) h12 += entropy_term_bits(joint.data()[i]);
  out.joint_entropy = h12;

  double cond = 0.0;
  for (int x = 0; x < m; ++x) {
    double hx = 0.0;
    for (Eigen::Index u = 0; u < u1n; ++u) hx += entropy_term_bits(a(u, x));
    for (Eigen::Index u = 0; u < u2n; ++u) hx += entropy_term_bits(b(u, x));
    cond += prior[x] * hx;
  }
  out.mutual_information = h12 - cond;

  double correct = 0.0;
  out.map_decision.resize(static_cast<std::size_t>(u1n * u2n));
  for (Eigen::Index u1 = 0; u1 < u1n; ++u1)
    for (Eigen::Index u2 = 0; u2 < u2n; ++u2) {
      double best = -1.0;
      int arg = 0;
      for (int x = 0; x < m; ++x) {
        const double v = prior[x] * a(u1, x) * b(u2, x);
        if (v > best) {
          best = v;
          arg = x;
        }
      }
      correct += best;
      out.map_decision[u1 * u2n + u2] = arg;
    }
  out.map_ser = 1.0 - correct;
  return out;
}

ExactMetrics exact_metrics(const RelayPartition& p1, const RelayPartition& p2, const Constellation& c,
                           double variance1, double variance2) {
  return exact_metrics(relay_conditionals(p1, c, variance1), relay_conditionals(p2, c, variance2), c);
}

LearnedExact learned_exact(const SystemModels& models, const std::array<RelayConditionals, 2>& cond,
                           const Constellation& c) {
  LearnedExact out;
  const int m = c.size();
  const auto prior = c.prior();
  for (std::size_t r = 0; r < models.relays.size(); ++r) {
    const auto& relay = models.relays[r];
    for (std::size_t k = 0; k < relay.encoders.size(); ++k) {
      const VectorXd len = relay.entropy[k].code_lengths();
      const MatrixXd& pc = cond[r].component[k];
      VectorXd marginal = VectorXd::Zero(pc.rows());
      for (int x = 0; x < m; ++x) marginal += prior[x] * pc.col(x);
      const double rate = len.dot(marginal);
      out.component_rate[r].push_back(rate);
      out.component_entropy[r].push_back(entropy_bits(std::span<const double>(marginal.data(), marginal.size())));
      out.rate[r] += rate;
    }
  }
  const auto table = pair_table(models.demod);
  const MatrixXd& a = cond[0].composite;
  const MatrixXd& b = cond[1].composite;
  if (a.rows() != table.u1_size || b.rows() != table.u2_size)
    throw ArgumentError("conditionals do not match the demodulator layout");
  double d = 0.0;
  double err = 0.0;
  for (int x = 0; x < m; ++x)
    for (int u1 = 0; u1 < table.u1_size; ++u1) {
      const double pa = a(u1, x);
      if (pa == 0.0) continue;
      for (int u2 = 0; u2 < table.u2_size; ++u2) {
        const double w = prior[x] * pa * b(u2, x);
        const int pair = table.pair(u1, u2);
        d += w * table.code_length(x, pair);
        if (table.decision[pair] != x) err += w;
      }
    }
  out.distortion = d;
  out.ser = err;
  return out;
}

McMetrics mc_metrics(const SystemModels& models, const Constellation& c, const ChannelConfig& cfg, long n,
                     std::uint64_t seed, const std::vector<int>* map_decision) {
  models.validate();
  if (n < 1) throw ArgumentError("Monte-Carlo sample count must be positive");
  constexpr long kBlock = 8192;
  const long blocks = (n + kBlock - 1) / kBlock;
  const auto table = pair_table(models.demod);
  const int relays = static_cast<int>(models.relays.size());

  struct Partial {
    double rate[2] = {0, 0}, rate_sq[2] = {0, 0};
    double dist = 0, dist_sq = 0;
    long errors = 0, map_errors = 0;
    std::vector<long> counts[2];
  };
  std::vector<Partial> partial(blocks);
  std::vector<Eigen::VectorXd> lengths[2];
  for (int r = 0; r < relays; ++r)
    for (const auto& e : models.relays[r].entropy) lengths[r].push_back(e.code_lengths());

#pragma omp parallel for schedule(dynamic)
  for (long blk = 0; blk < blocks; ++blk) {
    const long len = std::min(kBlock, n - blk * kBlock);
    const auto block_seed = split_seed(seed, static_cast<std::uint64_t>(blk));
    Rng source = make_rng(block_seed, Stream::source);
    NoiseStreams noise = NoiseStreams::from_run_seed(block_seed);
    const Batch batch = draw_batch(c, cfg, static_cast<int>(len), source, noise);
    auto& p = partial[blk];
    std::vector<int> idx[2];
    for (int r = 0; r < 2; ++r) {
      if (r >= relays) {
        idx[r].assign(len, 0);
        p.counts[r].assign(1, 0);
        continue;
      }
      const auto& relay = models.relays[r];
      p.counts[r].assign(relay.composite_size(), 0);
      std::vector<double> bits(len, 0.0);
      idx[r].assign(len, 0);
      for (std::size_t k = 0; k < relay.encoders.size(); ++k) {
        const auto comp = encode_hard_batch(relay.encoders[k], batch.y[r]);
        for (long i = 0; i < len; ++i) {
          bits[i] += lengths[r][k][comp[i]];
          idx[r][i] = idx[r][i] * relay.encoders[k].K + comp[i];
        }
      }
      for (long i = 0; i < len; ++i) {
        p.rate[r] += bits[i];
        p.rate_sq[r] += bits[i] * bits[i];
      }
    }
    for (long i = 0; i < len; ++i) {
      ++p.counts[0][idx[0][i]];
      ++p.counts[1][idx[1][i]];
      const int pair = table.pair(idx[0][i], idx[1][i]);
      const int w = batch.symbols[i];
      const double cl = table.code_length(w, pair);
      p.dist += cl;
      p.dist_sq += cl * cl;
      if (table.decision[pair] != w) ++p.errors;
      if (map_decision && (*map_decision)[pair] != w) ++p.map_errors;
    }
  }

  McMetrics out;
  out.samples = n;
  const double nn = static_cast<double>(n);
  auto mean_se = [nn](double s, double sq, double& mean, double& se) {
    mean = s / nn;
    const double var = std::max(0.0, sq / nn - mean * mean);
    se = std::sqrt(var / nn);
  };
  for (int r = 0; r < 2; ++r) {
    double s = 0, sq = 0;
    std::vector<long> counts(partial.empty() ? 1 : partial[0].counts[r].size(), 0);
    for (const auto& p : partial) {
      s += p.rate[r];
      sq += p.rate_sq[r];
      for (std::size_t u = 0; u < counts.size(); ++u) counts[u] += p.counts[r][u];
    }
    mean_se(s, sq, out.rate[r], out.rate_stderr[r]);
    // Plug-in entropy; standard error of the mean of -log2 p_hat(U).
    double h = 0.0, h2 = 0.0;
    for (long cnt : counts) {
      if (cnt == 0) continue;
      const double ph = cnt / nn;
      const double l = -std::log2(ph);
      h += ph * l;
      h2 += ph * l * l;
    }
    out.entropy[r] = h;
    out.entropy_stderr[r] = std::sqrt(std::max(0.0, h2 - h * h) / nn);
  }
  double ds = 0, dsq = 0;
  long errors = 0, map_errors = 0;
  for (const auto& p : partial) {
    ds += p.dist;
    dsq += p.dist_sq;
    errors += p.errors;
    map_errors += p.map_errors;
  }
  mean_se(ds, dsq, out.distortion, out.distortion_stderr);
  out.ser = errors / nn;
  out.ser_stderr = std::sqrt(out.ser * (1.0 - out.ser) / nn);
  if (map_decision) {
    out.map_ser = map_errors / nn;
    out.map_ser_stderr = std::sqrt(out.map_ser * (1.0 - out.map_ser) / nn);
  }
  return out;
}

}  // namespace ncf
