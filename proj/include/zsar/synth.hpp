#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace zsar {

// Synthetic corpus generator. Class names are pairs of tokens drawn from a
// small shared pool and object sets are drawn from a shared vocabulary, so
// unseen classes lie in the span of structure visible during training --
// the property that makes zero-shot transfer possible at desk scale.
struct SynthConfig {
  std::size_t n_classes = 20;
  std::size_t per_class = 30;
  std::size_t backbone_dim = 64;
  double noise_sigma = 0.1;
  std::size_t object_vocab_size = 8;
  std::size_t objects_per_class = 3;
  std::uint64_t seed = 1;
  std::size_t semantic_dim = 300;
};

struct SynthPaths {
  std::string embeddings;
  std::string classes;
  std::string features;
  std::string detections;
};

struct SynthData {
  SynthPaths paths;
  // planted per-class object sets, in class order, names sorted
  std::vector<std::pair<std::string, std::vector<std::string>>> planted_objects;
  std::size_t name_token_pool = 0;
};

// Writes embeddings.txt, classes.csv, features.csv and detections.jsonl
// under out_dir (created if needed). Same seed, same bytes.
SynthData synth_generate(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace zsar
