#include "zsar/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<double> unit_gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Smallest pool with at least n distinct unordered token pairs.
std::size_t pool_for(std::size_t n) {
  std::size_t p = 2;
  while (p * (p - 1) / 2 < n) ++p;
  return p;
}

}  // namespace

SynthData synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.n_classes < 2 || cfg.per_class == 0 || cfg.backbone_dim == 0 ||
      cfg.semantic_dim == 0 || cfg.object_vocab_size == 0 || cfg.objects_per_class == 0) {
    throw ConfigError("synth_generate: sizes must be positive (and at least 2 classes)");
  }
  if (cfg.objects_per_class > cfg.object_vocab_size) {
    throw ConfigError("synth_generate: objects_per_class exceeds the object vocabulary");
  }
  if (!(cfg.noise_sigma >= 0.0)) {
    throw ConfigError("synth_generate: noise_sigma must be non-negative");
  }

  std::filesystem::create_directories(out_dir);
  std::mt19937_64 rng(cfg.seed);
  const std::size_t dim = cfg.semantic_dim;

  // Vocabulary: a shared token pool for class names plus the object names.
  const std::size_t pool = pool_for(cfg.n_classes);
  std::vector<std::string> name_tokens(pool);
  std::vector<std::vector<double>> token_vecs(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    name_tokens[i] = "act" + std::to_string(i);
    token_vecs[i] = unit_gaussian(dim, rng);
  }
  std::vector<std::string> object_names(cfg.object_vocab_size);
  std::vector<std::vector<double>> object_vecs(cfg.object_vocab_size);
  for (std::size_t i = 0; i < cfg.object_vocab_size; ++i) {
    object_names[i] = "obj" + std::to_string(i);
    object_vecs[i] = unit_gaussian(dim, rng);
  }

  // Class names: a seeded draw of distinct token pairs.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < pool; ++a) {
    for (std::size_t b = a + 1; b < pool; ++b) pairs.emplace_back(a, b);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(cfg.n_classes);

  // Planted object subsets.
  std::vector<std::vector<std::size_t>> class_objects(cfg.n_classes);
  for (auto& objs : class_objects) {
    std::vector<std::size_t> all(cfg.object_vocab_size);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    objs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.objects_per_class));
    std::sort(objs.begin(), objs.end());
  }

  // Per-class semantic and object-semantic vectors.
  auto class_semantic = [&](std::size_t c) {
    std::vector<double> v(dim, 0.0);
    const auto [a, b] = pairs[c];
    for (std::size_t i = 0; i < dim; ++i) v[i] = 0.5 * (token_vecs[a][i] + token_vecs[b][i]);
    return v;
  };
  auto object_semantic = [&](std::size_t c) {
    std::vector<double> v(dim, 0.0);
    for (std::size_t o : class_objects[c]) {
      for (std::size_t i = 0; i < dim; ++i) v[i] += object_vecs[o][i];
    }
    for (auto& x : v) x /= static_cast<double>(cfg.objects_per_class);
    return v;
  };

  // Fixed mixing matrix: features are a linear image of the concatenated
  // class and object semantics plus isotropic noise.
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> mix(cfg.backbone_dim * 2 * dim);
  for (auto& x : mix) x = gauss(rng);

  SynthData out;
  out.name_token_pool = pool;
  out.paths.embeddings = out_dir + "/embeddings.txt";
  out.paths.classes = out_dir + "/classes.csv";
  out.paths.features = out_dir + "/features.csv";
  out.paths.detections = out_dir + "/detections.jsonl";

  {
    std::ofstream emb(out.paths.embeddings);
    if (!emb) throw DataError("cannot write '" + out.paths.embeddings + "'");
    emb << pool + cfg.object_vocab_size << " " << dim << "\n";
    for (std::size_t i = 0; i < pool; ++i) {
      emb << name_tokens[i];
      for (double x : token_vecs[i]) emb << " " << fmt_double(x);
      emb << "\n";
    }
    for (std::size_t i = 0; i < cfg.object_vocab_size; ++i) {
      emb << object_names[i];
      for (double x : object_vecs[i]) emb << " " << fmt_double(x);
      emb << "\n";
    }
  }

  std::vector<std::string> class_ids(cfg.n_classes);
  {
    std::ofstream cls(out.paths.classes);
    if (!cls) throw DataError("cannot write '" + out.paths.classes + "'");
    cls << "class_id,name\n";
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
      class_ids[c] = "c" + std::to_string(c);
      cls << class_ids[c] << "," << name_tokens[pairs[c].first] << " "
          << name_tokens[pairs[c].second] << "\n";
    }
  }

  std::ofstream feat(out.paths.features);
  if (!feat) throw DataError("cannot write '" + out.paths.features + "'");
  feat << "video_id,class_id";
  for (std::size_t i = 0; i < cfg.backbone_dim; ++i) feat << ",f" << i;
  feat << "\n";

  std::ofstream det(out.paths.detections);
  if (!det) throw DataError("cannot write '" + out.paths.detections + "'");

  std::uniform_real_distribution<double> true_prob(0.65, 0.95);
  std::uniform_real_distribution<double> noise_prob(0.05, 0.35);

  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    const auto semantic = class_semantic(c);
    const auto object_sem = object_semantic(c);
    std::vector<double> joint(2 * dim);
    std::copy(semantic.begin(), semantic.end(), joint.begin());
    std::copy(object_sem.begin(), object_sem.end(), joint.begin() + static_cast<std::ptrdiff_t>(dim));

    std::vector<std::size_t> distract_pool;
    for (std::size_t o = 0; o < cfg.object_vocab_size; ++o) {
      if (!std::binary_search(class_objects[c].begin(), class_objects[c].end(), o)) {
        distract_pool.push_back(o);
      }
    }

    for (std::size_t s = 0; s < cfg.per_class; ++s) {
      const std::string video_id = class_ids[c] + "_v" + std::to_string(s);

      feat << video_id << "," << class_ids[c];
      for (std::size_t i = 0; i < cfg.backbone_dim; ++i) {
        double x = 0.0;
        const double* row = mix.data() + i * 2 * dim;
        for (std::size_t j = 0; j < 2 * dim; ++j) x += row[j] * joint[j];
        x += cfg.noise_sigma * gauss(rng);
        feat << "," << fmt_double(x);
      }
      feat << "\n";

      // True objects appear in every clip of the class. Distractors rotate
      // through the remaining vocabulary so no distractor can reach the
      // per-class clip count, which keeps the planted sets recoverable.
      nlohmann::json rec;
      rec["video_id"] = video_id;
      rec["class_id"] = class_ids[c];
      nlohmann::json labels = nlohmann::json::array();
      for (std::size_t o : class_objects[c]) {
        labels.push_back({{"name", object_names[o]}, {"prob", true_prob(rng)}});
      }
      std::size_t n_distract = 0;
      if (cfg.per_class >= 2) {
        if (distract_pool.size() >= 4) n_distract = 2;
        else if (distract_pool.size() >= 2) n_distract = 1;
      }
      for (std::size_t d = 0; d < n_distract; ++d) {
        const std::size_t pick = (s * n_distract + d) % distract_pool.size();
        labels.push_back({{"name", object_names[distract_pool[pick]]}, {"prob", noise_prob(rng)}});
      }
      rec["labels"] = std::move(labels);
      det << rec.dump() << "\n";
    }
  }

  out.planted_objects.reserve(cfg.n_classes);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    std::vector<std::string> names;
    names.reserve(cfg.objects_per_class);
    for (std::size_t o : class_objects[c]) names.push_back(object_names[o]);
    std::sort(names.begin(), names.end());
    out.planted_objects.emplace_back(class_ids[c], std::move(names));
  }
  return out;
}

}  // namespace zsar
