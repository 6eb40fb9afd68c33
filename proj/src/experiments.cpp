#include "ncf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ncf/bounds.hpp"
#include "svg.hpp"

namespace ncf {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join_k(const std::vector<int>& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? "x" : "") + std::to_string(k[i]);
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("experiment name must be nonempty");
  if (variants.empty() && bounds.empty()) throw ConfigError("experiment needs at least one variant");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  std::set<std::string> labels;
  for (const auto& v : variants) {
    if (v.label.empty()) throw ConfigError("variant label must be nonempty");
    if (!labels.insert(v.label).second) throw ConfigError("duplicate variant label '" + v.label + "'");
    if (v.lambdas.empty()) throw ConfigError("variant '" + v.label + "' has an empty lambda list");
    for (double l : v.lambdas)
      if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda values must be positive");
    TrainConfig c = v.config;
    c.lambda = v.lambdas.front();
    c.validate();
  }
  for (const auto& g : hull_groups)
    for (const auto& l : g)
      if (!labels.count(l)) throw ConfigError("hull group names unknown variant '" + l + "'");
  for (const auto& b : bounds)
    for (double r : b.rates)
      if (r < 0.0) throw ConfigError("bound rates must be nonnegative");
}

ExperimentSpec parse_experiment(const Json& j) {
  static const std::set<std::string> keys = {"name",   "out",         "seed",         "restarts", "base",
                                             "lambdas", "variants",   "bounds",       "hull_groups",
                                             "regions_rate", "comment"};
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!keys.count(key)) throw ConfigError("unknown experiment key '" + key + "'");
  ExperimentSpec s;
  s.source = j;
  try {
    s.name = j.value("name", "");
    s.out = j.value("out", "");
    s.seed = j.value("seed", std::uint64_t{1});
    s.restarts = j.value("restarts", 3);
    const TrainConfig base = j.contains("base") ? train_config_from_json(j["base"]) : TrainConfig{};
    const auto grid = j.value("lambdas", std::vector<double>{});
    if (!j.contains("variants")) {
      // A bounds-only spec has no training runs.
      if (j.contains("lambdas") || j.contains("base") || !j.contains("bounds"))
        s.variants.push_back({std::string(to_string(base.scheme)), base, grid});
    } else {
      for (const auto& v : j["variants"]) {
        for (const auto& [key, _] : v.items())
          if (key != "label" && key != "config" && key != "lambdas")
            throw ConfigError("unknown variant key '" + key + "'");
        Variant var;
        var.config = v.contains("config") ? train_config_from_json(v["config"], base) : base;
        var.label = v.value("label", std::string(to_string(var.config.scheme)));
        var.lambdas = v.value("lambdas", grid);
        s.variants.push_back(std::move(var));
      }
    }
    for (const auto& b : j.value("bounds", Json::array())) {
      BoundSpec bs;
      bs.modulation = parse_modulation(b.at("modulation").get<std::string>());
      bs.snr1_db = b.value("snr1_db", 10.0);
      bs.snr2_db = b.value("snr2_db", bs.snr1_db);
      bs.power = b.value("power", 1.0);
      bs.rates = b.value("rates", std::vector<double>{});
      s.bounds.push_back(std::move(bs));
    }
    s.hull_groups = j.value("hull_groups", std::vector<std::vector<std::string>>{});
    if (j.contains("regions_rate")) s.regions_rate = j["regions_rate"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

ExperimentSpec load_experiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed spec " + path.string() + ": " + e.what());
  }
  return parse_experiment(j);
}

std::vector<BoundRow> compute_bounds(const BoundSpec& spec) {
  const auto c = Constellation::build(spec.modulation, spec.power);
  const auto ch = ChannelConfig::from_snr_db(spec.snr1_db, spec.snr2_db, spec.power, c.dim());
  const double one = mi_awgn(c, ch.sigma1_sq);
  const double two = mi_two_obs(c, ch.sigma1_sq, ch.sigma2_sq);
  std::vector<BoundRow> rows;
  for (double r : spec.rates) {
    BoundQuery q;
    q.constellation = c;
    q.variance1 = ch.sigma1_sq;
    q.variance2 = ch.sigma2_sq;
    q.rate1 = q.rate2 = r;
    rows.push_back({std::string(to_string(spec.modulation)), spec.snr1_db, spec.snr2_db, r, r, cut_set(q), one, two});
  }
  return rows;
}

std::string bounds_csv(const std::vector<BoundRow>& rows) {
  std::string s = "scheme,gamma1_dB,gamma2_dB,R1,R2,cut_set_bits,mi_one_relay,mi_two_relays\n";
  for (const auto& r : rows)
    s += r.scheme + "," + num(r.snr1_db) + "," + num(r.snr2_db) + "," + num(r.rate1) + "," + num(r.rate2) + "," +
         num(r.cut_set_bits) + "," + num(r.mi_one_relay) + "," + num(r.mi_two_relays) + "\n";
  return s;
}

void write_bounds_csv(const fs::path& path, const std::vector<BoundRow>& rows) { write_file(path, bounds_csv(rows)); }

std::string results_csv(const ExperimentResult& result) {
  std::string s =
      "scheme,modulation,iq_mode,gamma1_dB,gamma2_dB,lambda,K1,K2,R1,R2,R,MI_lower_bound,MI_exact,SER_MC,"
      "SER_MAP_exact,seed\n";
  for (const auto& v : result.variants)
    for (const auto& r : v.records) {
      if (r.failed || !r.selected) continue;
      const auto& c = r.config;
      const auto& m = r.metrics;
      s += std::string(to_string(c.scheme)) + "," + std::string(to_string(c.modulation)) + "," +
           std::string(to_string(c.iq_mode)) + "," + num(c.snr1_db) + "," + num(c.snr2_db) + "," + num(c.lambda) +
           "," + join_k(c.K1) + "," + join_k(c.K2) + "," + num(m.rate1) + "," + num(m.rate2) + "," + num(m.rate) +
           "," + num(m.mi_lower_bound) + "," + num(m.mi_exact) + "," + num(m.ser_mc) + "," + num(m.ser_map_exact) +
           "," + std::to_string(c.seed) + "\n";
    }
  return s;
}

std::vector<std::pair<double, double>> group_hull(const ExperimentResult& result,
                                                  const std::vector<std::string>& labels) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& v : result.variants) {
    if (std::find(labels.begin(), labels.end(), v.label) == labels.end()) continue;
    for (const auto& r : v.records)
      if (!r.failed && r.selected) pts.emplace_back(r.metrics.rate, r.metrics.mi_exact);
  }
  std::vector<std::pair<double, double>> out;
  for (auto i : upper_hull(pts)) out.push_back(pts[i]);
  return out;
}

std::string spec_hash(const ExperimentSpec& spec) {
  return hex64(fnv1a(spec.source.dump() + "|" + std::to_string(spec.seed) + "|" + std::to_string(spec.restarts) +
                     "|" + kVersionTag));
}

ExperimentResult load_experiment_result(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw NotFoundError("no manifest in " + dir.string());
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  ExperimentResult result;
  result.out = dir;
  result.complete = manifest.value("complete", false);
  for (const auto& jv : manifest.at("variants")) {
    VariantResult vr;
    vr.label = jv.at("label").get<std::string>();
    vr.monotonicity_violations = jv.value("monotonicity_violations", 0);
    for (const auto& jr : jv.at("runs")) {
      if (jr.value("failed", false)) {
        RunRecord r;
        r.failed = true;
        r.diagnostic = jr.value("diagnostic", "");
        r.config.lambda = jr.value("lambda", 0.0);
        r.restart = jr.value("restart", 0);
        vr.records.push_back(std::move(r));
        continue;
      }
      vr.records.push_back(load_record(dir / jr.at("record").get<std::string>()));
    }
    result.variants.push_back(std::move(vr));
  }
  const auto spec = parse_experiment(manifest.at("spec"));
  for (const auto& b : spec.bounds) {
    const auto rows = compute_bounds(b);
    result.bounds.insert(result.bounds.end(), rows.begin(), rows.end());
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int workers) {
  spec.validate();
  if (spec.out.empty()) throw ConfigError("experiment output directory is not set");
  ExperimentResult result;
  result.out = spec.out;
  fs::create_directories(spec.out);
  {
    // Fail early on an unwritable directory.
    const auto probe = spec.out / ".write_probe";
    std::ofstream(probe) << "";
    if (!fs::exists(probe)) throw ConfigError("output directory is not writable: " + spec.out.string());
    fs::remove(probe);
  }

  Json manifest;
  manifest["name"] = spec.name;
  manifest["version"] = kVersionTag;
  manifest["spec_hash"] = spec_hash(spec);
  manifest["master_seed"] = spec.seed;
  manifest["restarts"] = spec.restarts;
  manifest["spec"] = spec.source;
  manifest["variants"] = Json::array();

  for (std::size_t vi = 0; vi < spec.variants.size(); ++vi) {
    const auto& var = spec.variants[vi];
    std::vector<TrainConfig> cfgs;
    for (double l : var.lambdas) {
      TrainConfig c = var.config;
      c.lambda = l;
      cfgs.push_back(c);
    }
    SweepOptions opt;
    opt.restarts = spec.restarts;
    opt.workers = workers;
    opt.master_seed = spec.seed;
    opt.variant = vi;
    VariantResult vr;
    vr.label = var.label;
    vr.records = sweep(cfgs, opt);
    vr.monotonicity_violations = rate_monotonicity_violations(vr.records);

    Json jv;
    jv["label"] = var.label;
    jv["monotonicity_violations"] = vr.monotonicity_violations;
    jv["runs"] = Json::array();
    const auto dir = spec.out / "records" / var.label;
    for (const auto& r : vr.records) {
      const auto path = save_record(dir, r);
      Json jr;
      jr["lambda"] = r.config.lambda;
      jr["restart"] = r.restart;
      jr["seed"] = r.config.seed;
      jr["record"] = fs::relative(path, spec.out).generic_string();
      jr["failed"] = r.failed;
      if (r.failed) {
        jr["diagnostic"] = r.diagnostic;
        result.complete = false;
      }
      jr["selected"] = r.selected;
      jr["on_hull"] = r.on_hull;
      jr["degenerate"] = r.degenerate;
      jr["soft_hard_mismatch"] = r.soft_hard_mismatch;
      jr["R"] = r.metrics.rate;
      jr["MI_exact"] = r.metrics.mi_exact;
      jr["wall_seconds"] = r.wall_seconds;
      jv["runs"].push_back(jr);
    }
    manifest["variants"].push_back(jv);
    result.variants.push_back(std::move(vr));
  }

  for (const auto& b : spec.bounds) {
    const auto rows = compute_bounds(b);
    result.bounds.insert(result.bounds.end(), rows.begin(), rows.end());
  }
  write_bounds_csv(spec.out / "bounds.csv", result.bounds);
  write_file(spec.out / "results.csv", results_csv(result));

  manifest["hull_groups"] = Json::array();
  for (const auto& g : spec.hull_groups) {
    Json jg;
    jg["labels"] = g;
    jg["hull"] = group_hull(result, g);
    manifest["hull_groups"].push_back(jg);
  }
  manifest["complete"] = result.complete;
  manifest["files"] = {{"results", "results.csv"}, {"bounds", "bounds.csv"}};

  if (spec.regions_rate) {
    const RunRecord* best = nullptr;
    for (const auto& v : result.variants)
      for (const auto& r : v.records) {
        if (r.failed || !r.selected || r.config.scheme != Scheme::distributed) continue;
        if (!best || std::abs(r.metrics.rate - *spec.regions_rate) < std::abs(best->metrics.rate - *spec.regions_rate))
          best = &r;
      }
    if (best) {
      const auto reg = export_regions(*best);
      write_file(spec.out / "regions_relays.svg", reg.relays_svg);
      if (!reg.plane_svg.empty()) write_file(spec.out / "regions_plane.svg", reg.plane_svg);
      manifest["regions"] = {{"record", record_stem(*best)},
                             {"R", best->metrics.rate},
                             {"max_pair_components", reg.max_pair_components}};
    }
  }

  // Figures are built from the files just written.
  write_file(spec.out / "manifest.json", manifest.dump(1) + "\n");
  const auto curves = export_curves(spec.out);
  write_file(spec.out / "curves.csv", curves.csv);
  write_file(spec.out / "curves_mi.svg", curves.mi_svg);
  write_file(spec.out / "curves_ser.svg", curves.ser_svg);
  return result;
}

// Decision regions.

RegionExport export_regions(const RunRecord& run, int resolution) {
  if (run.failed || run.models.relays.empty()) throw NotFoundError("run has no trained models");
  const auto& cfg = run.config;
  const auto c = cfg.constellation();
  const auto ch = cfg.channel();
  const auto& models = run.models;
  RegionExport out;

  ExtractionOptions ext = cfg.extraction;
  ext.resolution_1d = resolution;
  for (std::size_t r = 0; r < models.relays.size(); ++r)
    out.partitions.push_back(extract_relay(models.relays[r], cfg.power, ch.variance(static_cast<int>(r)), ext));

  const auto levels = c.levels();
  const double reach = levels.back() + 4.0 * std::sqrt(std::max(ch.sigma1_sq, ch.sigma2_sq) / c.dim());
  out.lo = -reach;
  out.hi = reach;
  auto clip = [&](double v) { return std::clamp(v, out.lo, out.hi); };

  // Per-relay strips: one row per relay component.
  {
    int rows = 0;
    for (const auto& p : out.partitions) rows += static_cast<int>(p.components.size());
    svg::Document d(svg::Plot::kWidth, 80.0 + 60.0 * rows);
    svg::Plot frame(out.lo, out.hi, 0, 1);
    int row = 0;
    for (std::size_t r = 0; r < out.partitions.size(); ++r)
      for (std::size_t k = 0; k < out.partitions[r].components.size(); ++k, ++row) {
        const auto& part = out.partitions[r].components[k];
        const double y = 30.0 + 60.0 * row;
        std::string name = "relay " + std::to_string(r + 1);
        if (out.partitions[r].components.size() > 1) name += k == 0 ? " (I)" : " (Q)";
        d.text(frame.px(out.lo), y - 6, name, 12);
        if (part.dim == 1) {
          for (int i = 0; i < part.interval_count(); ++i) {
            const double a = clip(i == 0 ? -INFINITY : part.breakpoints[i - 1]);
            const double b = clip(i + 1 == part.interval_count() ? INFINITY : part.breakpoints[i]);
            if (b <= a) continue;
            d.rect(frame.px(a), y, frame.px(b) - frame.px(a), 30, svg::color(part.labels[i]));
            d.text((frame.px(a) + frame.px(b)) / 2, y + 20, std::to_string(part.labels[i]), 10, "middle");
          }
          for (double bp : part.breakpoints)
            if (bp > out.lo && bp < out.hi) d.line(frame.px(bp), y - 3, frame.px(bp), y + 33, "black", 1.5);
        } else {
          d.text(frame.px(0), y + 20, "two-dimensional quantizer: see plane figure", 11, "middle");
        }
        for (double l : levels) d.circle(frame.px(l), y + 38, 3, "black");
      }
    for (int i = 0; i <= 4; ++i) {
      const double x = out.lo + (out.hi - out.lo) * i / 4.0;
      d.text(frame.px(x), 70.0 + 60.0 * rows, svg::fmt(x), 11, "middle");
    }
    out.relays_svg = d.str();
  }

  const auto& p0 = out.partitions[0].components[0];
  if (c.dim() == 1 && models.relays.size() == 2) {
    const auto& p1 = out.partitions[1].components[0];
    const auto table = pair_table(models.demod);
    auto edges = [&](const QuantizerPartition& p, int i) {
      return std::pair{i == 0 ? -INFINITY : p.breakpoints[i - 1],
                       i + 1 == p.interval_count() ? INFINITY : p.breakpoints[i]};
    };
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> cells;
    for (int i = 0; i < p0.interval_count(); ++i)
      for (int k = 0; k < p1.interval_count(); ++k) {
        const auto [a, b] = edges(p0, i);
        const auto [e, f] = edges(p1, k);
        RegionRect rr{clip(a), clip(b), clip(e), clip(f), p0.labels[i], p1.labels[k], 0};
        rr.decision = table.decision[table.pair(rr.u1, rr.u2)];
        out.plane.push_back(rr);
        cells[{rr.u1, rr.u2}].push_back({i, k});
      }
    // Connected components of same-pair cells on the interval grid.
    for (const auto& [pair, list] : cells) {
      std::vector<int> comp(list.size(), -1);
      int count = 0;
      for (std::size_t s = 0; s < list.size(); ++s) {
        if (comp[s] >= 0) continue;
        std::vector<std::size_t> stack{s};
        comp[s] = count;
        while (!stack.empty()) {
          const auto t = stack.back();
          stack.pop_back();
          for (std::size_t o = 0; o < list.size(); ++o) {
            if (comp[o] >= 0) continue;
            const int di = std::abs(list[o].first - list[t].first);
            const int dk = std::abs(list[o].second - list[t].second);
            if (di + dk == 1) {
              comp[o] = count;
              stack.push_back(o);
            }
          }
        }
        ++count;
      }
      out.max_pair_components = std::max(out.max_pair_components, count);
    }

    svg::Document d(svg::Plot::kWidth - svg::Plot::kRight + 40, svg::Plot::kHeight + 60);
    svg::Plot frame(out.lo, out.hi, out.lo, out.hi);
    const int u2n = models.relays[1].composite_size();
    for (const auto& r : out.plane) {
      if (r.x1 <= r.x0 || r.y1 <= r.y0) continue;
      d.rect(frame.px(r.x0), frame.py(r.y1), frame.px(r.x1) - frame.px(r.x0), frame.py(r.y0) - frame.py(r.y1),
             svg::color(r.u1 * u2n + r.u2), "stroke=\"white\" stroke-width=\"0.5\"");
      const double cx = (frame.px(r.x0) + frame.px(r.x1)) / 2, cy = (frame.py(r.y0) + frame.py(r.y1)) / 2;
      if (frame.px(r.x1) - frame.px(r.x0) > 14 && frame.py(r.y0) - frame.py(r.y1) > 14)
        d.text(cx, cy + 4, std::to_string(r.decision), 10, "middle");
    }
    for (int w = 0; w < c.size(); ++w) {
      const double x = c.point(w)[0];
      d.circle(frame.px(x), frame.py(x), 4, "black");
    }
    frame.axes(d, "y1 (relay 1)", "y2 (relay 2)");
    out.plane_svg = d.str();
  } else if (c.dim() == 2) {
    // IQ relays: label map of each relay over its observation plane.
    svg::Document d(2 * (svg::Plot::kWidth - svg::Plot::kRight) + 60, svg::Plot::kHeight + 20);
    const int n = 96;
    for (std::size_t r = 0; r < out.partitions.size(); ++r) {
      const double off = r * (svg::Plot::kWidth - svg::Plot::kRight + 30);
      svg::Plot frame(out.lo, out.hi, out.lo, out.hi);
      const double cell = (frame.px(out.hi) - frame.px(out.lo)) / n;
      const auto& rp = out.partitions[r];
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          const double y[2] = {out.lo + (i + 0.5) * (out.hi - out.lo) / n, out.lo + (k + 0.5) * (out.hi - out.lo) / n};
          std::vector<int> digits;
          for (std::size_t q = 0; q < rp.components.size(); ++q) {
            const auto& part = rp.components[q];
            digits.push_back(part.dim == 2 ? part.label_at(y) : part.label_at(std::span<const double>(&y[rp.offsets[q]], 1)));
          }
          const int u = models.relays[r].compose(digits);
          d.rect(off + frame.px(out.lo) + i * cell, frame.py(out.lo) - (k + 1) * cell, cell + 0.2, cell + 0.2,
                 svg::color(u));
        }
      for (int w = 0; w < c.size(); ++w) {
        const auto p = c.point(w);
        d.circle(off + frame.px(p[0]), frame.py(p[1]), 3, "black");
      }
      d.text(off + frame.px(0), 20, "relay " + std::to_string(r + 1), 12, "middle");
    }
    out.plane_svg = d.str();
  }
  return out;
}

// Curves.

Overlay read_overlay(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw NotFoundError("cannot open overlay " + csv.string());
  Overlay o;
  o.label = csv.stem().string();
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double r, b;
    if (!(ss >> r >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("overlay rows must be numeric (R, bits): " + csv.string());
    }
    first = false;
    o.points.emplace_back(r, b);
  }
  return o;
}

CurveExport export_curves(const std::vector<CurvePoint>& points, const std::vector<BoundRow>& bounds,
                          const std::vector<double>& references, const std::vector<Overlay>& overlays) {
  CurveExport out;
  out.csv = "label,R,MI_exact,MI_lower_bound,SER_MC,SER_MAP_exact,on_hull\n";
  for (const auto& p : points)
    out.csv += p.label + "," + num(p.rate) + "," + num(p.mi_exact) + "," + num(p.mi_lower_bound) + "," +
               num(p.ser_mc) + "," + num(p.ser_map_exact) + "," + (p.on_hull ? "1" : "0") + "\n";

  std::vector<std::string> labels;
  for (const auto& p : points)
    if (std::find(labels.begin(), labels.end(), p.label) == labels.end()) labels.push_back(p.label);
  // With group hulls present, only the hulls are drawn as lines.
  auto is_hull = [](const std::string& l) { return l.size() > 5 && l.ends_with(" hull"); };
  const bool grouped = std::any_of(labels.begin(), labels.end(), is_hull);
  auto lined = [&](const std::string& l) { return !grouped || is_hull(l); };

  double rmax = 0.5, ymax = 0.1, smin = 1.0;
  for (const auto& p : points) {
    rmax = std::max(rmax, p.rate);
    ymax = std::max(ymax, p.mi_exact);
    if (p.ser_mc > 0) smin = std::min(smin, p.ser_mc);
  }
  for (double r : references) ymax = std::max(ymax, r);
  for (const auto& o : overlays)
    for (const auto& [r, b] : o.points) {
      rmax = std::max(rmax, r);
      ymax = std::max(ymax, b);
    }
  rmax = std::ceil(rmax * 2.0) / 2.0;
  ymax = std::ceil(ymax * 10.0 + 0.5) / 10.0;

  {
    svg::Document d(svg::Plot::kWidth, svg::Plot::kHeight);
    svg::Plot plot(0.0, rmax, 0.0, ymax);
    plot.axes(d, "average relay rate R (bits)", "mutual information (bits)");
    int row = 0;
    for (std::size_t li = 0; li < labels.size(); ++li) {
      std::vector<std::pair<double, double>> hull;
      for (const auto& p : points) {
        if (p.label != labels[li]) continue;
        d.circle(plot.px(p.rate), plot.py(p.mi_exact), 3.5, svg::color(static_cast<int>(li)));
        if (p.on_hull) hull.emplace_back(p.rate, p.mi_exact);
      }
      std::sort(hull.begin(), hull.end());
      std::vector<std::pair<double, double>> px;
      for (const auto& [r, m] : hull) px.emplace_back(plot.px(r), plot.py(m));
      if (lined(labels[li])) d.polyline(px, svg::color(static_cast<int>(li)));
      plot.legend(d, row++, labels[li], svg::color(static_cast<int>(li)));
    }
    std::vector<double> refs = references;
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               refs.end());
    for (double r : refs) d.line(plot.px(0), plot.py(r), plot.px(rmax), plot.py(r), "#444444", 1.2,
                                 "stroke-dasharray=\"6,4\"");
    if (!refs.empty()) plot.legend(d, row++, "two perfect relays", "#444444", "6,4");
    std::map<std::string, std::vector<std::pair<double, double>>> cut;
    for (const auto& b : bounds)
      cut[b.scheme + " " + svg::fmt(b.snr1_db) + "/" + svg::fmt(b.snr2_db) + " dB"].emplace_back(
          plot.px(b.rate1), plot.py(b.cut_set_bits));
    for (auto& [name, pts] : cut) {
      std::sort(pts.begin(), pts.end());
      d.polyline(pts, "#999999", 1.2, "stroke-dasharray=\"2,3\"");
      plot.legend(d, row++, "cut-set " + name, "#999999", "2,3");
    }
    for (std::size_t oi = 0; oi < overlays.size(); ++oi) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& [r, b] : overlays[oi].points) pts.emplace_back(plot.px(r), plot.py(b));
      d.polyline(pts, "black", 1.5);
      plot.legend(d, row++, overlays[oi].label, "black");
    }
    out.mi_svg = d.str();
  }
  {
    const double lo = std::pow(10.0, std::floor(std::log10(std::max(smin, 1e-6))));
    svg::Document d(svg::Plot::kWidth, svg::Plot::kHeight);
    svg::Plot plot(0.0, rmax, lo, 1.0, true);
    plot.axes(d, "average relay rate R (bits)", "symbol error rate");
    for (std::size_t li = 0; li < labels.size(); ++li) {
      std::vector<std::pair<double, double>> line;
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : points)
        if (p.label == labels[li] && p.ser_mc > 0) pts.emplace_back(p.rate, p.ser_mc);
      std::sort(pts.begin(), pts.end());
      for (const auto& [r, s] : pts) {
        d.circle(plot.px(r), plot.py(s), 3.5, svg::color(static_cast<int>(li)));
        line.emplace_back(plot.px(r), plot.py(s));
      }
      if (lined(labels[li])) d.polyline(line, svg::color(static_cast<int>(li)), 1.0);
      plot.legend(d, static_cast<int>(li), labels[li], svg::color(static_cast<int>(li)));
    }
    out.ser_svg = d.str();
  }
  return out;
}

CurveExport export_curves(const fs::path& experiment_dir, const std::vector<Overlay>& overlays) {
  std::ifstream in(experiment_dir / "manifest.json");
  if (!in) throw NotFoundError("no manifest in " + experiment_dir.string());
  const Json manifest = Json::parse(in);
  std::vector<CurvePoint> points;
  std::vector<double> references;
  for (const auto& v : manifest.at("variants"))
    for (const auto& r : v.at("runs")) {
      if (r.at("failed").get<bool>() || !r.at("selected").get<bool>()) continue;
      std::ifstream rin(experiment_dir / r.at("record").get<std::string>());
      if (!rin) throw NotFoundError("missing record " + r.at("record").get<std::string>());
      const Json rec = Json::parse(rin);
      const auto m = run_metrics_from_json(rec.at("metrics"));
      points.push_back({v.at("label").get<std::string>(), m.rate, m.mi_exact, m.mi_lower_bound, m.ser_mc,
                        m.ser_map_exact, r.at("on_hull").get<bool>()});
      references.push_back(m.mi_two_obs);
    }
  // Union hulls of hull groups appear as their own curve.
  for (const auto& g : manifest.value("hull_groups", Json::array())) {
    // Named after the labels' common prefix: distributed, distributed_k4 -> "distributed hull".
    std::string prefix = g.at("labels").at(0).get<std::string>();
    for (const auto& l : g.at("labels")) {
      const auto s = l.get<std::string>();
      std::size_t n = 0;
      while (n < prefix.size() && n < s.size() && prefix[n] == s[n]) ++n;
      prefix.resize(n);
    }
    while (!prefix.empty() && (prefix.back() == '_' || prefix.back() == ' ')) prefix.pop_back();
    const std::string name = (prefix.empty() ? std::string("group") : prefix) + " hull";
    for (const auto& p : g.at("hull")) {
      const double rate = p[0].get<double>(), mi = p[1].get<double>();
      CurvePoint cp{name, rate, mi, 0.0, 0.0, 0.0, true};
      for (const auto& q : points)
        if (q.rate == rate && q.mi_exact == mi) {
          cp.mi_lower_bound = q.mi_lower_bound;
          cp.ser_mc = q.ser_mc;
          cp.ser_map_exact = q.ser_map_exact;
        }
      points.push_back(cp);
    }
  }
  std::vector<BoundRow> bounds;
  std::ifstream bin(experiment_dir / "bounds.csv");
  std::string line;
  std::getline(bin, line);
  while (std::getline(bin, line)) {
    std::istringstream ss(line);
    BoundRow b;
    std::string field;
    std::getline(ss, b.scheme, ',');
    double* targets[] = {&b.snr1_db, &b.snr2_db, &b.rate1, &b.rate2, &b.cut_set_bits, &b.mi_one_relay,
                         &b.mi_two_relays};
    for (double* t : targets) {
      std::getline(ss, field, ',');
      *t = std::stod(field);
    }
    bounds.push_back(b);
  }
  return export_curves(points, bounds, references, overlays);
}

}  // namespace ncf
