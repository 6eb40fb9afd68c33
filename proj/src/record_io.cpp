#include "ncf/record_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace ncf {

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ArgumentError("truncated model file");
  return v;
}

constexpr char kMagic[8] = {'N', 'C', 'F', 'S', 'Y', 'S', '0', '1'};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown " + std::string(what) + " key '" + key + "'");
}

}  // namespace

Json to_json(const TrainConfig& cfg) {
  Json j;
  j["scheme"] = to_string(cfg.scheme);
  j["modulation"] = to_string(cfg.modulation);
  j["iq_mode"] = to_string(cfg.iq_mode);
  j["power"] = cfg.power;
  j["snr1_db"] = cfg.snr1_db;
  j["snr2_db"] = cfg.snr2_db;
  j["lambda"] = cfg.lambda;
  j["K1"] = cfg.K1;
  j["K2"] = cfg.K2;
  j["hidden"] = cfg.hidden;
  j["batch_size"] = cfg.batch_size;
  j["steps"] = cfg.steps;
  j["finetune_steps"] = cfg.finetune_steps;
  j["learning_rate"] = cfg.adam.learning_rate;
  j["beta1"] = cfg.adam.beta1;
  j["beta2"] = cfg.adam.beta2;
  j["epsilon"] = cfg.adam.epsilon;
  j["tau_start"] = cfg.tau_start;
  j["tau_end"] = cfg.tau_end;
  j["encoder_gain"] = cfg.encoder_gain;
  j["seed"] = cfg.seed;
  j["chunk"] = cfg.chunk;
  j["mc_samples"] = cfg.mc_samples;
  j["range_sigmas"] = cfg.extraction.range_sigmas;
  j["resolution_1d"] = cfg.extraction.resolution_1d;
  j["resolution_2d"] = cfg.extraction.resolution_2d;
  return j;
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base) {
  static const std::set<std::string> keys = {
      "scheme",        "modulation", "iq_mode",  "power",     "snr1_db",      "snr2_db",    "lambda",
      "K1",            "K2",         "K",        "hidden",    "batch_size",   "steps",      "finetune_steps",
      "learning_rate", "beta1",      "beta2",    "epsilon",   "tau_start",    "tau_end",    "seed",
      "encoder_gain",  "chunk",         "mc_samples", "range_sigmas", "resolution_1d", "resolution_2d"};
  check_keys(j, keys, "config");
  TrainConfig c = base;
  try {
    if (j.contains("scheme")) c.scheme = parse_scheme(j["scheme"].get<std::string>());
    if (j.contains("modulation")) c.modulation = parse_modulation(j["modulation"].get<std::string>());
    if (j.contains("iq_mode")) c.iq_mode = parse_iq_mode(j["iq_mode"].get<std::string>());
    if (j.contains("power")) c.power = j["power"].get<double>();
    if (j.contains("snr1_db")) c.snr1_db = j["snr1_db"].get<double>();
    if (j.contains("snr2_db")) c.snr2_db = j["snr2_db"].get<double>();
    if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
    // "K" sets both relays.
    // A bare number is a one-component alphabet.
    auto sizes = [](const Json& v) {
      return v.is_number() ? std::vector<int>{v.get<int>()} : v.get<std::vector<int>>();
    };
    if (j.contains("K")) c.K1 = c.K2 = sizes(j["K"]);
    if (j.contains("K1")) c.K1 = sizes(j["K1"]);
    if (j.contains("K2")) c.K2 = sizes(j["K2"]);
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("finetune_steps")) c.finetune_steps = j["finetune_steps"].get<int>();
    if (j.contains("learning_rate")) c.adam.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("beta1")) c.adam.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.adam.beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) c.adam.epsilon = j["epsilon"].get<double>();
    if (j.contains("tau_start")) c.tau_start = j["tau_start"].get<double>();
    if (j.contains("tau_end")) c.tau_end = j["tau_end"].get<double>();
    if (j.contains("encoder_gain")) c.encoder_gain = j["encoder_gain"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("chunk")) c.chunk = j["chunk"].get<int>();
    if (j.contains("mc_samples")) c.mc_samples = j["mc_samples"].get<long>();
    if (j.contains("range_sigmas")) c.extraction.range_sigmas = j["range_sigmas"].get<double>();
    if (j.contains("resolution_1d")) c.extraction.resolution_1d = j["resolution_1d"].get<int>();
    if (j.contains("resolution_2d")) c.extraction.resolution_2d = j["resolution_2d"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

Json to_json(const RunMetrics& m) {
  Json j;
  j["R1"] = m.rate1;
  j["R2"] = m.rate2;
  j["R"] = m.rate;
  j["distortion"] = m.distortion;
  j["mi_lower_bound"] = m.mi_lower_bound;
  j["mi_exact"] = m.mi_exact;
  j["ser_mc"] = m.ser_mc;
  j["ser_mc_stderr"] = m.ser_mc_stderr;
  j["ser_map_exact"] = m.ser_map_exact;
  j["ser_demod_exact"] = m.ser_demod_exact;
  j["H1"] = m.entropy1;
  j["H2"] = m.entropy2;
  j["H12"] = m.joint_entropy;
  j["loss_exact"] = m.loss_exact;
  j["mi_two_obs"] = m.mi_two_obs;
  j["cut_set"] = m.cut_set;
  j["baseline_mi"] = m.baseline_mi;
  j["R1_mc"] = m.rate1_mc;
  j["R2_mc"] = m.rate2_mc;
  j["distortion_mc"] = m.distortion_mc;
  j["distortion_mc_stderr"] = m.distortion_mc_stderr;
  j["soft_hard_rate_gap"] = m.soft_hard_rate_gap;
  j["loss_start"] = m.loss_start;
  j["loss_end"] = m.loss_end;
  return j;
}

RunMetrics run_metrics_from_json(const Json& j) {
  RunMetrics m;
  m.rate1 = j.at("R1").get<double>();
  m.rate2 = j.at("R2").get<double>();
  m.rate = j.at("R").get<double>();
  m.distortion = j.at("distortion").get<double>();
  m.mi_lower_bound = j.at("mi_lower_bound").get<double>();
  m.mi_exact = j.at("mi_exact").get<double>();
  m.ser_mc = j.at("ser_mc").get<double>();
  m.ser_mc_stderr = j.at("ser_mc_stderr").get<double>();
  m.ser_map_exact = j.at("ser_map_exact").get<double>();
  m.ser_demod_exact = j.at("ser_demod_exact").get<double>();
  m.entropy1 = j.at("H1").get<double>();
  m.entropy2 = j.at("H2").get<double>();
  m.joint_entropy = j.at("H12").get<double>();
  m.loss_exact = j.at("loss_exact").get<double>();
  m.mi_two_obs = j.at("mi_two_obs").get<double>();
  m.cut_set = j.at("cut_set").get<double>();
  m.baseline_mi = j.at("baseline_mi").get<double>();
  m.rate1_mc = j.at("R1_mc").get<double>();
  m.rate2_mc = j.at("R2_mc").get<double>();
  m.distortion_mc = j.at("distortion_mc").get<double>();
  m.distortion_mc_stderr = j.at("distortion_mc_stderr").get<double>();
  m.soft_hard_rate_gap = j.at("soft_hard_rate_gap").get<double>();
  m.loss_start = j.at("loss_start").get<double>();
  m.loss_end = j.at("loss_end").get<double>();
  return m;
}

void write_models(std::ostream& os, const SystemModels& models) {
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(models.relays.size()));
  for (const auto& relay : models.relays) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(relay.encoders.size()));
    for (std::size_t c = 0; c < relay.encoders.size(); ++c) {
      const auto& enc = relay.encoders[c];
      put<std::int32_t>(os, enc.K);
      put<std::int32_t>(os, enc.input_offset);
      put<std::int32_t>(os, enc.input_width);
      put<double>(os, enc.input_scale);
      write_net(os, enc.net);
      const auto& logits = relay.entropy[c].logits;
      put<std::uint32_t>(os, static_cast<std::uint32_t>(logits.size()));
      for (Eigen::Index i = 0; i < logits.size(); ++i) put<double>(os, logits[i]);
    }
  }
  const auto& dem = models.demod;
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dem.relay_components.size()));
  for (const auto& comps : dem.relay_components) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(comps.size()));
    for (int k : comps) put<std::int32_t>(os, k);
  }
  put<std::int32_t>(os, dem.num_symbols);
  write_net(os, dem.net);
}

SystemModels read_models(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) throw ArgumentError("not a model file");
  SystemModels m;
  const auto relays = get<std::uint32_t>(is);
  if (relays < 1 || relays > 2) throw ArgumentError("bad relay count in model file");
  for (std::uint32_t r = 0; r < relays; ++r) {
    RelayCodec relay;
    const auto comps = get<std::uint32_t>(is);
    if (comps < 1 || comps > 2) throw ArgumentError("bad component count in model file");
    for (std::uint32_t c = 0; c < comps; ++c) {
      EncoderModel enc;
      enc.K = get<std::int32_t>(is);
      enc.input_offset = get<std::int32_t>(is);
      enc.input_width = get<std::int32_t>(is);
      enc.input_scale = get<double>(is);
      enc.net = read_net(is);
      EntropyModel ent(static_cast<int>(get<std::uint32_t>(is)));
      for (Eigen::Index i = 0; i < ent.logits.size(); ++i) ent.logits[i] = get<double>(is);
      relay.encoders.push_back(std::move(enc));
      relay.entropy.push_back(std::move(ent));
    }
    m.relays.push_back(std::move(relay));
  }
  const auto dem_relays = get<std::uint32_t>(is);
  if (dem_relays < 1 || dem_relays > 2) throw ArgumentError("bad demodulator relay count");
  for (std::uint32_t r = 0; r < dem_relays; ++r) {
    std::vector<int> comps(get<std::uint32_t>(is));
    for (auto& k : comps) k = get<std::int32_t>(is);
    m.demod.relay_components.push_back(std::move(comps));
  }
  m.demod.num_symbols = get<std::int32_t>(is);
  m.demod.net = read_net(is);
  m.validate();
  return m;
}

std::string record_stem(const RunRecord& rec) {
  const auto& c = rec.config;
  std::string s = std::string(to_string(c.scheme)) + "_" + std::string(to_string(c.modulation));
  if (c.iq_mode != IqMode::none) s += "_" + std::string(to_string(c.iq_mode));
  s += "_g1_" + num(c.snr1_db) + "_g2_" + num(c.snr2_db) + "_lam_" + num(c.lambda) + "_seed_" +
       std::to_string(c.seed);
  return s;
}

std::filesystem::path save_record(const std::filesystem::path& dir, const RunRecord& rec) {
  std::filesystem::create_directories(dir);
  const auto stem = record_stem(rec);
  Json j;
  j["config"] = to_json(rec.config);
  j["metrics"] = to_json(rec.metrics);
  j["failed"] = rec.failed;
  j["diagnostic"] = rec.diagnostic;
  j["degenerate"] = rec.degenerate;
  j["soft_hard_mismatch"] = rec.soft_hard_mismatch;
  j["selected"] = rec.selected;
  j["on_hull"] = rec.on_hull;
  j["restart"] = rec.restart;
  j["wall_seconds"] = rec.wall_seconds;
  // Block means of 100 steps keep the files small.
  std::vector<double> curve;
  for (std::size_t i = 0; i < rec.loss_trace.size(); i += 100) {
    const std::size_t end = std::min(rec.loss_trace.size(), i + 100);
    double s = 0.0;
    for (std::size_t k = i; k < end; ++k) s += rec.loss_trace[k];
    curve.push_back(s / static_cast<double>(end - i));
  }
  j["loss_curve"] = curve;
  j["models"] = stem + ".bin";
  if (rec.pretrained) j["pretrained"] = stem + ".pre.bin";
  const auto path = dir / (stem + ".json");
  std::ofstream(path) << j.dump(1) << "\n";
  if (!rec.failed) {
    std::ofstream bin(dir / (stem + ".bin"), std::ios::binary);
    write_models(bin, rec.models);
  }
  if (rec.pretrained) {
    std::ofstream bin(dir / (stem + ".pre.bin"), std::ios::binary);
    write_models(bin, *rec.pretrained);
  }
  return path;
}

RunRecord load_record(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw NotFoundError("cannot open " + json_path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed record " + json_path.string() + ": " + e.what());
  }
  RunRecord rec;
  rec.config = train_config_from_json(j.at("config"));
  rec.metrics = run_metrics_from_json(j.at("metrics"));
  rec.failed = j.value("failed", false);
  rec.diagnostic = j.value("diagnostic", "");
  rec.degenerate = j.value("degenerate", false);
  rec.soft_hard_mismatch = j.value("soft_hard_mismatch", false);
  rec.selected = j.value("selected", true);
  rec.on_hull = j.value("on_hull", false);
  rec.restart = j.value("restart", 0);
  rec.wall_seconds = j.value("wall_seconds", 0.0);
  rec.loss_trace = j.value("loss_curve", std::vector<double>{});
  const auto dir = json_path.parent_path();
  if (!rec.failed) {
    std::ifstream bin(dir / j.at("models").get<std::string>(), std::ios::binary);
    if (!bin) throw NotFoundError("missing model blob for " + json_path.string());
    rec.models = read_models(bin);
  }
  if (j.contains("pretrained")) {
    std::ifstream bin(dir / j["pretrained"].get<std::string>(), std::ios::binary);
    if (!bin) throw NotFoundError("missing pretrained blob for " + json_path.string());
    rec.pretrained = read_models(bin);
  }
  return rec;
}

}  // namespace ncf
