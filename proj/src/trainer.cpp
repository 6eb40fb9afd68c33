#include "ncf/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <omp.h>

#include "ncf/bounds.hpp"

namespace ncf {

namespace {

double window_mean(const std::vector<double>& v, bool tail, std::size_t window = 100) {
  if (v.empty()) return 0.0;
  const std::size_t n = std::min(window, v.size());
  const auto begin = tail ? v.end() - static_cast<std::ptrdiff_t>(n) : v.begin();
  return std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
}

/// Nearest-symbol scalar quantizer at relay 1 (per dimension for IQ).
RelayPartition ml_partition(const Constellation& c) {
  const auto levels = c.levels();
  QuantizerPartition part;
  part.dim = 1;
  part.K = static_cast<int>(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i > 0) part.breakpoints.push_back(0.5 * (levels[i - 1] + levels[i]));
    part.labels.push_back(static_cast<int>(i));
  }
  RelayPartition rp;
  for (int k = 0; k < c.dim(); ++k) {
    rp.components.push_back(part);
    rp.offsets.push_back(k);
  }
  return rp;
}

double soft_hard_gap(const SystemModels& models, const TrainConfig& cfg) {
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  Rng source = make_rng(split_seed(cfg.seed, 77), Stream::source);
  NoiseStreams noise = NoiseStreams::from_run_seed(split_seed(cfg.seed, 77));
  const Batch b = draw_batch(c, ch, 4096, source, noise);
  double gap = 0.0;
  for (std::size_t r = 0; r < models.relays.size(); ++r) {
    const auto& relay = models.relays[r];
    double soft = 0.0, hard = 0.0;
    for (std::size_t k = 0; k < relay.encoders.size(); ++k) {
      soft += rate_term(relay.encoders[k], relay.entropy[k], b.y[r], cfg.tau_end);
      hard += rate_term_hard(relay.encoders[k], relay.entropy[k], b.y[r]);
    }
    gap = std::max(gap, std::abs(soft - hard));
  }
  return gap;
}

void finish_record(RunRecord& rec) {
  const auto& m = rec.metrics;
  rec.degenerate = m.mi_exact < m.baseline_mi - 1e-6;
  rec.soft_hard_mismatch = m.soft_hard_rate_gap > 0.05;
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
  if (name == "distributed") return Scheme::distributed;
  if (name == "p2p") return Scheme::p2p;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(Scheme s) { return s == Scheme::distributed ? "distributed" : "p2p"; }

void TrainConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  if (steps < 1) throw ConfigError("step count must be at least 1");
  if (finetune_steps < 0) throw ConfigError("finetune step count must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(tau_start > 0.0) || !(tau_end > 0.0)) throw ConfigError("temperatures must be positive");
  if (!(encoder_gain > 0.0)) throw ConfigError("encoder gain must be positive");
  if (chunk < 1) throw ConfigError("chunk size must be positive");
  if (mc_samples < 1) throw ConfigError("Monte-Carlo sample count must be positive");
  if (!(power > 0.0)) throw ConfigError("power must be positive");
  const auto c = Constellation::build(modulation, power);
  const std::size_t want = (c.dim() == 2 && iq_mode == IqMode::split) ? 2 : 1;
  if (c.dim() == 1 && iq_mode != IqMode::none) throw ConfigError("iq_mode is only valid for QAM");
  if (c.dim() == 2 && iq_mode == IqMode::none) throw ConfigError("QAM requires iq_mode joint or split");
  if (K1.size() != want || K2.size() != want) throw ConfigError("K list does not match iq_mode");
  for (int k : K1)
    if (k < 1) throw ConfigError("K must be positive");
  for (int k : K2)
    if (k < 1) throw ConfigError("K must be positive");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  channel().validate();
}

Constellation TrainConfig::constellation() const { return Constellation::build(modulation, power); }

ChannelConfig TrainConfig::channel() const {
  return ChannelConfig::from_snr_db(snr1_db, snr2_db, power, constellation().dim());
}

double TrainConfig::temperature(int step, int total) const {
  if (total <= 1) return tau_end;
  const double t = static_cast<double>(step) / (total - 1);
  return tau_start * std::pow(tau_end / tau_start, t);
}

namespace {

RelayCodec init_relay(const TrainConfig& cfg, std::span<const int> K, double noise_variance, Rng& rng) {
  RelayCodec relay = make_relay_codec(cfg.constellation(), cfg.iq_mode, K, noise_variance, cfg.hidden, rng);
  if (cfg.encoder_gain != 1.0)
    for (auto& enc : relay.encoders) {
      auto& out = enc.net.mutable_layer(enc.net.layer_count() - 1);
      out.weight *= cfg.encoder_gain;
      out.bias *= cfg.encoder_gain;
    }
  return relay;
}

}  // namespace

SystemModels init_distributed(const TrainConfig& cfg) {
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  Rng rng = make_rng(cfg.seed, Stream::init);
  SystemModels m;
  m.relays.push_back(init_relay(cfg, cfg.K1, ch.sigma1_sq, rng));
  m.relays.push_back(init_relay(cfg, cfg.K2, ch.sigma2_sq, rng));
  m.demod = DemodulatorModel::create({m.relays[0].component_sizes(), m.relays[1].component_sizes()}, c.size(),
                                     cfg.hidden, rng);
  return m;
}

void optimize(SystemModels& models, const TrainConfig& cfg, int steps, bool train_relays, Rng& source,
              NoiseStreams& noise, std::vector<double>& history) {
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  LossOptions opt;
  opt.lambda = cfg.lambda;
  opt.train_relays = train_relays;
  opt.chunk = cfg.chunk;
  SystemGradient grad = SystemGradient::zeros_like(models);
  const auto params = parameter_blocks(models, train_relays, true);
  const auto grads = gradient_blocks(grad, train_relays, true);
  std::vector<std::size_t> sizes;
  for (const auto& p : params) sizes.push_back(p.size());
  AdamState adam(cfg.adam, sizes);
  history.reserve(history.size() + steps);
  for (int step = 0; step < steps; ++step) {
    opt.temperature = train_relays ? cfg.temperature(step, steps) : cfg.tau_end;
    const Batch batch = draw_batch(c, ch, cfg.batch_size, source, noise);
    grad.set_zero();
    const LossValue v = evaluate_loss(models, batch, opt, &grad);
    if (!std::isfinite(v.total)) throw DivergenceError("non-finite loss at step " + std::to_string(step));
    adam.step(params, grads);
    history.push_back(v.total);
  }
  // Parameters were written through spans; invalidate outstanding tapes.
  for (auto& relay : models.relays)
    for (auto& enc : relay.encoders) enc.net.touch();
  models.demod.net.touch();
}

RunMetrics evaluate_run(const SystemModels& models, const TrainConfig& cfg) {
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  RunMetrics m;
  std::array<RelayConditionals, 2> cond;
  for (std::size_t r = 0; r < models.relays.size(); ++r) {
    const auto part = extract_relay(models.relays[r], cfg.power, ch.variance(static_cast<int>(r)), cfg.extraction);
    cond[r] = relay_conditionals(part, c, ch.variance(static_cast<int>(r)));
  }
  if (models.relays.size() == 1) cond[1] = silent_conditionals(c);

  const auto exact = exact_metrics(cond[0], cond[1], c);
  const auto learned = learned_exact(models, cond, c);
  m.rate1 = learned.rate[0];
  m.rate2 = learned.rate[1];
  m.rate = 0.5 * (m.rate1 + m.rate2);
  m.distortion = learned.distortion;
  m.mi_lower_bound = std::log2(static_cast<double>(c.size())) - learned.distortion;
  m.mi_exact = exact.mutual_information;
  m.ser_map_exact = exact.map_ser;
  m.ser_demod_exact = learned.ser;
  m.entropy1 = exact.entropy1;
  m.entropy2 = exact.entropy2;
  m.joint_entropy = exact.joint_entropy;
  m.loss_exact = m.rate1 + m.rate2 + cfg.lambda * m.distortion;

  const auto mc = mc_metrics(models, c, ch, cfg.mc_samples, split_seed(cfg.seed, static_cast<std::uint64_t>(Stream::evaluation)),
                             &exact.map_decision);
  m.ser_mc = mc.ser;
  m.ser_mc_stderr = mc.ser_stderr;
  m.rate1_mc = mc.rate[0];
  m.rate2_mc = mc.rate[1];
  m.distortion_mc = mc.distortion;
  m.distortion_mc_stderr = mc.distortion_stderr;

  m.mi_two_obs = mi_two_obs(c, ch.sigma1_sq, ch.sigma2_sq);
  BoundQuery q;
  q.constellation = c;
  q.variance1 = ch.sigma1_sq;
  q.variance2 = ch.sigma2_sq;
  q.rate1 = m.rate1;
  q.rate2 = m.rate2;
  m.cut_set = cut_set(q);

  const auto base_cond = relay_conditionals(ml_partition(c), c, ch.sigma1_sq);
  const auto base = exact_metrics(base_cond, silent_conditionals(c), c);
  const double sum_rate = m.rate1 + m.rate2;
  m.baseline_mi = base.mutual_information * std::min(1.0, sum_rate / base.entropy1);
  m.soft_hard_rate_gap = soft_hard_gap(models, cfg);
  return m;
}

RunRecord train_distributed(const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  try {
    cfg.validate();
    rec.models = init_distributed(cfg);
    Rng source = make_rng(cfg.seed, Stream::source);
    NoiseStreams noise = NoiseStreams::from_run_seed(cfg.seed);
    optimize(rec.models, cfg, cfg.steps, true, source, noise, rec.loss_trace);
    rec.metrics = evaluate_run(rec.models, cfg);
    rec.metrics.loss_start = window_mean(rec.loss_trace, false);
    rec.metrics.loss_end = window_mean(rec.loss_trace, true);
    finish_record(rec);
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.diagnostic = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

namespace {

SystemModels pretrain_single(const TrainConfig& cfg, std::vector<double>& history) {
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  Rng rng = make_rng(cfg.seed, Stream::init);
  SystemModels single;
  single.relays.push_back(init_relay(cfg, cfg.K1, ch.sigma1_sq, rng));
  single.demod = DemodulatorModel::create({single.relays[0].component_sizes()}, c.size(), cfg.hidden, rng);
  Rng source = make_rng(cfg.seed, Stream::source);
  NoiseStreams noise = NoiseStreams::from_run_seed(cfg.seed);
  optimize(single, cfg, cfg.steps, true, source, noise, history);
  return single;
}

}  // namespace

RunRecord train_single_relay(const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  try {
    cfg.validate();
    rec.models = pretrain_single(cfg, rec.loss_trace);
    rec.metrics = evaluate_run(rec.models, cfg);
    rec.metrics.loss_start = window_mean(rec.loss_trace, false);
    rec.metrics.loss_end = window_mean(rec.loss_trace, true);
    finish_record(rec);
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.diagnostic = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunRecord train_p2p(const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  try {
    cfg.validate();
    std::vector<double> phase1;
    SystemModels single = pretrain_single(cfg, phase1);
    const auto c = cfg.constellation();

    SystemModels joint;
    joint.relays = {single.relays[0], single.relays[0]};
    Rng rng = make_rng(cfg.seed, Stream::finetune);
    const auto comps = single.relays[0].component_sizes();
    joint.demod = DemodulatorModel::create({comps, comps}, c.size(), cfg.hidden, rng);
    Rng source = make_rng(split_seed(cfg.seed, 2), Stream::source);
    NoiseStreams noise = NoiseStreams::from_run_seed(split_seed(cfg.seed, 2));
    const int steps = cfg.finetune_steps > 0 ? cfg.finetune_steps : cfg.steps;
    optimize(joint, cfg, steps, false, source, noise, rec.loss_trace);

    rec.models = std::move(joint);
    rec.pretrained = std::move(single);
    rec.metrics = evaluate_run(rec.models, cfg);
    // Trend of the phase that trains the encoders.
    rec.metrics.loss_start = window_mean(phase1, false);
    rec.metrics.loss_end = window_mean(phase1, true);
    finish_record(rec);
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.diagnostic = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunRecord train(const TrainConfig& cfg) {
  return cfg.scheme == Scheme::distributed ? train_distributed(cfg) : train_p2p(cfg);
}

std::vector<std::size_t> upper_hull(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].first != points[b].first) return points[a].first < points[b].first;
    if (points[a].second != points[b].second) return points[a].second > points[b].second;
    return a < b;
  });
  // Pareto filter: keep strictly improving mutual information.
  std::vector<std::size_t> pareto;
  for (auto i : order)
    if (pareto.empty() || points[i].second > points[pareto.back()].second) pareto.push_back(i);
  // Upper concave envelope (monotone chain).
  std::vector<std::size_t> hull;
  for (auto i : pareto) {
    while (hull.size() >= 2) {
      const auto& a = points[hull[hull.size() - 2]];
      const auto& b = points[hull.back()];
      const auto& p = points[i];
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  return hull;
}

std::optional<double> interpolate(const std::vector<std::pair<double, double>>& hull, double rate) {
  if (hull.empty() || rate < hull.front().first || rate > hull.back().first) return std::nullopt;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[i + 1];
    if (rate <= b.first) {
      if (b.first == a.first) return std::max(a.second, b.second);
      const double t = (rate - a.first) / (b.first - a.first);
      return a.second + t * (b.second - a.second);
    }
  }
  return hull.back().second;
}

std::uint64_t derived_seed(const SweepOptions& opt, std::size_t lambda_index, int restart) {
  const auto variant = split_seed(opt.master_seed, 1000003ULL + opt.variant);
  return split_seed(split_seed(variant, lambda_index), static_cast<std::uint64_t>(restart));
}

void mark_hull(std::vector<RunRecord>& records) {
  std::vector<std::pair<double, double>> pts;
  std::vector<std::size_t> map;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].on_hull = false;
    if (records[i].failed || !records[i].selected) continue;
    pts.emplace_back(records[i].metrics.rate, records[i].metrics.mi_exact);
    map.push_back(i);
  }
  for (auto h : upper_hull(pts)) records[map[h]].on_hull = true;
}

int rate_monotonicity_violations(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> hull;
  for (const auto& r : records)
    if (r.on_hull) hull.push_back(&r);
  std::sort(hull.begin(), hull.end(), [](auto* a, auto* b) { return a->config.lambda < b->config.lambda; });
  int violations = 0;
  for (std::size_t i = 1; i < hull.size(); ++i)
    if (hull[i]->metrics.rate < hull[i - 1]->metrics.rate - 1e-9) ++violations;
  return violations;
}

std::vector<RunRecord> sweep(const std::vector<TrainConfig>& cfgs, const SweepOptions& opt) {
  if (cfgs.empty()) throw ConfigError("sweep needs at least one config");
  const int restarts = std::max(1, opt.restarts);
  struct Task {
    std::size_t cfg;
    int restart;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfgs.size(); ++i)
    for (int r = 0; r < restarts; ++r) tasks.push_back({i, r});
  std::vector<RunRecord> results(tasks.size());

  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(tasks.size())));
  auto work = [&] {
    if (workers > 1) omp_set_num_threads(1);
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      TrainConfig cfg = cfgs[tasks[t].cfg];
      cfg.seed = derived_seed(opt, tasks[t].cfg, tasks[t].restart);
      results[t] = train(cfg);
      results[t].restart = tasks[t].restart;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Best restart per config by exact training objective.
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].cfg != i) continue;
      results[t].selected = false;
      if (results[t].failed) continue;
      if (!best || results[t].metrics.loss_exact < results[*best].metrics.loss_exact) best = t;
    }
    if (best) results[*best].selected = true;
  }
  mark_hull(results);
  std::stable_sort(results.begin(), results.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.metrics.rate != b.metrics.rate) return a.metrics.rate < b.metrics.rate;
    if (a.config.lambda != b.config.lambda) return a.config.lambda < b.config.lambda;
    return a.restart < b.restart;
  });
  return results;
}

}  // namespace ncf
