// Command-line driver: train, sweep, bounds, eval, plot, regions.

#include <malloc.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ncf/bounds.hpp"
#include "ncf/experiments.hpp"
#include "ncf/record_io.hpp"
#include "ncf/trainer.hpp"

namespace fs = std::filesystem;
using namespace ncf;

namespace {

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void print_summary(const RunRecord& r) {
  const auto& m = r.metrics;
  if (r.failed) {
    std::printf("FAILED  %s\n", r.diagnostic.c_str());
    return;
  }
  std::printf("R1 %.4f  R2 %.4f  R %.4f  D %.4f  MI_lb %.4f  MI %.4f  SER_MC %.4g  SER_MAP %.4g  cut-set %.4f%s%s\n",
              m.rate1, m.rate2, m.rate, m.distortion, m.mi_lower_bound, m.mi_exact, m.ser_mc, m.ser_map_exact,
              m.cut_set, r.degenerate ? "  [below baseline]" : "", r.soft_hard_mismatch ? "  [soft/hard gap]" : "");
}

}  // namespace

int main(int argc, char** argv) {
  // Training reallocates the same large temporaries every step.
  mallopt(M_MMAP_THRESHOLD, 1 << 28);
  mallopt(M_TRIM_THRESHOLD, 1 << 29);

  CLI::App app{"Learned compress-and-forward relaying on the Gaussian diamond relay channel"};
  app.require_subcommand(1);

  fs::path spec, out, record, dir;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> overlays;
  long mc = 0;
  int resolution = 20000;

  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--spec", spec, "TrainConfig JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Run seed (overrides the file)");
  train->add_option("--out", out, "Directory for the run record (default: runs)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment spec (lambda sweeps, bounds, figures)");
  sweep_cmd->add_option("--spec", spec, "Experiment JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seed", seed, "Master seed (overrides the file)");
  sweep_cmd->add_option("--out", out, "Output directory (overrides the file)");
  sweep_cmd->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--overlay", overlays, "External (R, bits) baseline CSV")->check(CLI::ExistingFile);

  auto* bounds_cmd = app.add_subcommand("bounds", "Cut-set and perfect-relay bounds as CSV");
  bounds_cmd->add_option("--spec", spec, "Experiment JSON with a bounds list")->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--out", out, "CSV path (stdout if omitted)");

  auto* eval_cmd = app.add_subcommand("eval", "Re-evaluate a saved run");
  eval_cmd->add_option("--record", record, "Run record JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mc-samples", mc, "Monte-Carlo samples (default: the run's)");
  eval_cmd->add_option("--seed", seed, "Evaluation seed (default: the run's)");

  auto* plot_cmd = app.add_subcommand("plot", "Rate-MI and rate-SER figures of an experiment directory");
  plot_cmd->add_option("--dir", dir, "Experiment directory")->required()->check(CLI::ExistingDirectory);
  plot_cmd->add_option("--out", out, "Figure directory (default: --dir)");
  plot_cmd->add_option("--overlay", overlays, "External (R, bits) baseline CSV")->check(CLI::ExistingFile);

  auto* regions_cmd = app.add_subcommand("regions", "Quantization and decision regions of a run");
  regions_cmd->add_option("--record", record, "Run record JSON")->required()->check(CLI::ExistingFile);
  regions_cmd->add_option("--out", out, "Figure directory (default: next to the record)");
  regions_cmd->add_option("--resolution", resolution, "Extraction lattice size")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      auto cfg = train_config_from_json(read_json(spec));
      if (train->count("--seed")) cfg.seed = seed;
      const auto rec = ncf::train(cfg);
      const auto path = save_record(out.empty() ? fs::path("runs") : out, rec);
      print_summary(rec);
      std::printf("record: %s\n", path.string().c_str());
      return rec.failed ? 1 : 0;
    }
    if (sweep_cmd->parsed()) {
      auto exp = load_experiment(spec);
      if (sweep_cmd->count("--seed")) exp.seed = seed;
      if (!out.empty()) exp.out = out;
      const auto result = run_experiment(exp, workers);
      for (const auto& v : result.variants) {
        std::printf("== %s\n", v.label.c_str());
        for (const auto& r : v.records) {
          std::printf("lambda %-6g restart %d %s ", r.config.lambda, r.restart, r.selected ? "*" : " ");
          print_summary(r);
        }
        if (v.monotonicity_violations)
          std::printf("note: %d rate decreases with lambda along the hull\n", v.monotonicity_violations);
      }
      if (!overlays.empty()) {
        std::vector<Overlay> ov;
        for (const auto& o : overlays) ov.push_back(read_overlay(o));
        const auto curves = export_curves(result.out, ov);
        std::ofstream(result.out / "curves_mi.svg") << curves.mi_svg;
        std::ofstream(result.out / "curves_ser.svg") << curves.ser_svg;
      }
      std::printf("results: %s\n", (result.out / "results.csv").string().c_str());
      if (!result.complete) std::fprintf(stderr, "some runs failed; see manifest.json\n");
      return result.complete ? 0 : 1;
    }
    if (bounds_cmd->parsed()) {
      const auto exp = parse_experiment(read_json(spec));
      if (exp.bounds.empty()) throw ConfigError("spec has no bounds list");
      std::vector<BoundRow> rows;
      for (const auto& b : exp.bounds) {
        const auto part = compute_bounds(b);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (out.empty()) {
        std::cout << bounds_csv(rows);
      } else {
        write_bounds_csv(out, rows);
      }
      return 0;
    }
    if (eval_cmd->parsed()) {
      const auto rec = load_record(record);
      if (rec.failed) throw NotFoundError("record is a failed run without models");
      auto cfg = rec.config;
      if (mc > 0) cfg.mc_samples = mc;
      if (eval_cmd->count("--seed")) cfg.seed = seed;
      const auto m = evaluate_run(rec.models, cfg);
      std::cout << to_json(m).dump(1) << "\n";
      return 0;
    }
    if (plot_cmd->parsed()) {
      std::vector<Overlay> ov;
      for (const auto& o : overlays) ov.push_back(read_overlay(o));
      const auto curves = export_curves(dir, ov);
      const auto target = out.empty() ? dir : out;
      fs::create_directories(target);
      std::ofstream(target / "curves.csv") << curves.csv;
      std::ofstream(target / "curves_mi.svg") << curves.mi_svg;
      std::ofstream(target / "curves_ser.svg") << curves.ser_svg;
      std::printf("figures: %s\n", target.string().c_str());
      return 0;
    }
    if (regions_cmd->parsed()) {
      const auto rec = load_record(record);
      const auto reg = export_regions(rec, resolution);
      const auto target = out.empty() ? record.parent_path() : out;
      fs::create_directories(target);
      const auto stem = record.stem().string();
      std::ofstream(target / (stem + ".relays.svg")) << reg.relays_svg;
      if (!reg.plane_svg.empty()) std::ofstream(target / (stem + ".plane.svg")) << reg.plane_svg;
      for (std::size_t r = 0; r < reg.partitions.size(); ++r)
        for (const auto& part : reg.partitions[r].components) {
          if (part.dim != 1) continue;
          std::printf("relay %zu: %d intervals, max runs per index %d, breakpoints", r + 1, part.interval_count(),
                      part.max_runs_per_label());
          for (double b : part.breakpoints) std::printf(" %.4f", b);
          std::printf("\n");
        }
      std::printf("figures: %s\n", target.string().c_str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NotFoundError& e) {
    std::fprintf(stderr, "not found: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
