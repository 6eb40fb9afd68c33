#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ncf/exact_eval.hpp"
#include "ncf/record_io.hpp"
#include "ncf/trainer.hpp"

namespace ncf {

/// One curve of an experiment: a config template swept over lambda.
struct Variant {
  std::string label;
  TrainConfig config;
  std::vector<double> lambdas;
};

struct BoundSpec {
  Modulation modulation = Modulation::pam4;
  double snr1_db = 10.0;
  double snr2_db = 10.0;
  double power = 1.0;
  std::vector<double> rates;  // symmetric R1 = R2 = R
};

/// Experiment file, JSON:
///   name        string, required
///   out         output directory (CLI --out wins)
///   seed        master seed (CLI --seed wins)
///   restarts    seeds per lambda, default 3
///   base        config keys shared by all variants
///   lambdas     default lambda grid
///   variants    [{label, config: {...}, lambdas: [...]}]
///   bounds      [{modulation, snr1_db, snr2_db, power, rates: [...]}]
///   hull_groups [[label, ...]]  variants whose union hull is reported
///   regions_rate  export decision regions for the run nearest this rate
struct ExperimentSpec {
  std::string name;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  int restarts = 3;
  std::vector<Variant> variants;
  std::vector<BoundSpec> bounds;
  std::vector<std::vector<std::string>> hull_groups;
  std::optional<double> regions_rate;
  Json source;  // parsed file, hashed into the manifest

  void validate() const;
};

ExperimentSpec parse_experiment(const Json& j);
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct BoundRow {
  std::string scheme;  // modulation name
  double snr1_db = 0.0;
  double snr2_db = 0.0;
  double rate1 = 0.0;
  double rate2 = 0.0;
  double cut_set_bits = 0.0;
  double mi_one_relay = 0.0;
  double mi_two_relays = 0.0;
};

std::vector<BoundRow> compute_bounds(const BoundSpec& spec);
std::string bounds_csv(const std::vector<BoundRow>& rows);
void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundRow>& rows);

struct VariantResult {
  std::string label;
  std::vector<RunRecord> records;  // as returned by sweep()
  int monotonicity_violations = 0;
};

struct ExperimentResult {
  std::vector<VariantResult> variants;
  std::vector<BoundRow> bounds;
  bool complete = true;
  std::filesystem::path out;
};

/// Header plus one row per selected run.
std::string results_csv(const ExperimentResult& result);

/// Hull across several variants, as (rate, mi) pairs in increasing rate.
std::vector<std::pair<double, double>> group_hull(const ExperimentResult& result,
                                                  const std::vector<std::string>& labels);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
inline constexpr const char* kVersionTag = "ncf-1.0.0";

/// Hex digest of the spec, seed, restarts and version tag.
std::string spec_hash(const ExperimentSpec& spec);

/// Runs every variant sweep, writes records/, results.csv, bounds.csv,
/// manifest.json and the figures.
ExperimentResult run_experiment(const ExperimentSpec& spec, int workers);
/// Reads back the records and bounds run_experiment wrote to `dir`.
ExperimentResult load_experiment_result(const std::filesystem::path& dir);

// Figures.

struct RegionRect {
  double x0, x1, y0, y1;  // +-inf clipped to the plotted window
  int u1, u2, decision;
};

struct RegionExport {
  std::vector<RelayPartition> partitions;  // per relay
  std::vector<RegionRect> plane;          // d = 1 only
  double lo = 0.0, hi = 0.0;
  std::string relays_svg;
  std::string plane_svg;  // empty for d = 2
  /// Largest number of separate plane rectangles sharing one (u1, u2) pair
  /// that do not touch each other.
  int max_pair_components = 0;
};

RegionExport export_regions(const RunRecord& run, int resolution = 20000);

struct CurvePoint {
  std::string label;
  double rate = 0.0;
  double mi_exact = 0.0;
  double mi_lower_bound = 0.0;
  double ser_mc = 0.0;
  double ser_map_exact = 0.0;
  bool on_hull = false;
};

struct Overlay {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (R, bits)
};

/// Reads (R, bits) pairs; a non-numeric first line is skipped as a header.
Overlay read_overlay(const std::filesystem::path& csv);

struct CurveExport {
  std::string mi_svg;
  std::string ser_svg;
  std::string csv;
};

/// Curves from the selected runs of an experiment directory (its manifest
/// and records), with bound and external overlays.
CurveExport export_curves(const std::filesystem::path& experiment_dir, const std::vector<Overlay>& overlays = {});
CurveExport export_curves(const std::vector<CurvePoint>& points, const std::vector<BoundRow>& bounds,
                          const std::vector<double>& references, const std::vector<Overlay>& overlays);

}  // namespace ncf
