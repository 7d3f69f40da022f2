#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "zsar/fusion.hpp"
#include "zsar/model.hpp"

namespace zsar {

// Everything a benchmark run needs. Defaults: batch size 16, base learning
// rate 1e-4 halved every 5 epochs, 10 epochs (small datasets usually want
// 20), 30 random 50/50 class splits, top-k 20 and top-m 5 object
// aggregation, 10 attention tokens over the 300-dim space.
struct RunConfig {
  std::string embeddings_path;
  std::string classes_path;
  std::string features_path;
  std::string detections_path;  // optional in baseline mode
  std::string out_dir;

  std::size_t seen_count = 0;  // required; 0 means unset
  std::size_t n_splits = 30;

  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double base_lr = 1e-4;

  ModelMode mode = ModelMode::full;
  FusionMode fusion = FusionMode::cross_attention;
  std::size_t attention_tokens = 10;
  std::size_t attention_key_dim = 0;  // 0 -> token width
  std::array<std::size_t, 3> hallucinator_hidden = {512, 512, 512};

  std::size_t frames_per_clip = 8;  // provenance only
  std::size_t top_k_per_clip = 20;
  std::size_t top_m_per_class = 5;

  std::uint64_t seed = 1;  // master seed; split/init/shuffle streams derive from it

  void validate() const;  // throws ConfigError
};

// Reads a JSON object whose keys mirror the RunConfig fields (unknown keys
// are an error); missing keys keep their defaults.
RunConfig load_run_config(const std::string& path);

// Canonical JSON of the semantic fields (paths excluded).
std::string config_json(const RunConfig& cfg);

// FNV-1a hash of config_json, as fixed-width hex.
std::string config_fingerprint(const RunConfig& cfg);

}  // namespace zsar
