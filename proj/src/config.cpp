#include "zsar/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
  json j;
  j["seen_count"] = c.seen_count;
  j["n_splits"] = c.n_splits;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["mode"] = to_string(c.mode);
  j["fusion"] = to_string(c.fusion);
  j["attention_tokens"] = c.attention_tokens;
  j["attention_key_dim"] = c.attention_key_dim;
  j["hallucinator_hidden"] = c.hallucinator_hidden;
  j["frames_per_clip"] = c.frames_per_clip;
  j["top_k_per_clip"] = c.top_k_per_clip;
  j["top_m_per_class"] = c.top_m_per_class;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (seen_count == 0) throw ConfigError("seen_count must be set and positive");
  if (n_splits == 0) throw ConfigError("n_splits must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(base_lr > 0)) throw ConfigError("base_lr must be positive");
  if (attention_tokens == 0) throw ConfigError("attention_tokens must be positive");
  if (top_k_per_clip == 0 || top_m_per_class == 0) {
    throw ConfigError("top_k_per_clip and top_m_per_class must be positive");
  }
  for (auto h : hallucinator_hidden) {
    if (h == 0) throw ConfigError("hallucinator hidden widths must be positive");
  }
  if (embeddings_path.empty()) throw ConfigError("embeddings_path is required");
  if (classes_path.empty()) throw ConfigError("classes_path is required");
  if (features_path.empty()) throw ConfigError("features_path is required");
  if (mode != ModelMode::baseline && detections_path.empty()) {
    throw ConfigError("detections_path is required outside baseline mode");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError(path + ": config file is not a JSON object");
  }
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "embeddings_path") c.embeddings_path = value.get<std::string>();
      else if (key == "classes_path") c.classes_path = value.get<std::string>();
      else if (key == "features_path") c.features_path = value.get<std::string>();
      else if (key == "detections_path") c.detections_path = value.get<std::string>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else if (key == "seen_count") c.seen_count = value.get<std::size_t>();
      else if (key == "n_splits") c.n_splits = value.get<std::size_t>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "base_lr") c.base_lr = value.get<double>();
      else if (key == "mode") c.mode = model_mode_from_string(value.get<std::string>());
      else if (key == "fusion") c.fusion = fusion_mode_from_string(value.get<std::string>());
      else if (key == "attention_tokens") c.attention_tokens = value.get<std::size_t>();
      else if (key == "attention_key_dim") c.attention_key_dim = value.get<std::size_t>();
      else if (key == "hallucinator_hidden") {
        auto v = value.get<std::vector<std::size_t>>();
        if (v.size() != 3) throw ConfigError(path + ": hallucinator_hidden must list 3 widths");
        c.hallucinator_hidden = {v[0], v[1], v[2]};
      }
      else if (key == "frames_per_clip") c.frames_per_clip = value.get<std::size_t>();
      else if (key == "top_k_per_clip") c.top_k_per_clip = value.get<std::size_t>();
      else if (key == "top_m_per_class") c.top_m_per_class = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError(path + ": unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad config value: " + e.what());
  }
  return c;
}

std::string config_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_fingerprint(const RunConfig& cfg) {
  const std::string s = config_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace zsar
