#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "ncf/trainer.hpp"

namespace ncf {

using Json = nlohmann::ordered_json;

Json to_json(const TrainConfig& cfg);
/// Missing keys keep the value from `base`; unknown keys are rejected.
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base = {});

Json to_json(const RunMetrics& m);
RunMetrics run_metrics_from_json(const Json& j);

/// Binary parameter blob, little-endian:
///   magic "NCFSYS01" | u32 relay count
///   per relay: u32 components, per component: i32 K, i32 offset, i32 width, f64 scale, net,
///              u32 entropy size, f64 logits
///   demodulator: u32 relays, per relay u32 count + i32 sizes, i32 symbols, net
void write_models(std::ostream& os, const SystemModels& models);
SystemModels read_models(std::istream& is);

/// "<scheme>_<modulation>_g1_<dB>_g2_<dB>_lam_<lambda>_seed_<seed>".
std::string record_stem(const RunRecord& rec);

/// Writes <stem>.json and <stem>.bin (plus <stem>.pre.bin for p2p) into
/// `dir`; returns the JSON path.
std::filesystem::path save_record(const std::filesystem::path& dir, const RunRecord& rec);
/// The loaded loss_trace holds the stored 100-step block means.
RunRecord load_record(const std::filesystem::path& json_path);

}  // namespace ncf
