#include "zsar/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "zsar/errors.hpp"
#include "zsar/optim.hpp"

namespace zsar {

namespace {

// Distinct seed streams per purpose; split seeds use the low range.
constexpr std::uint64_t kInitStreamBase = 0x100000;
constexpr std::uint64_t kShuffleStreamBase = 0x200000;

void check_split(const Dataset& data, const Split& split) {
  std::unordered_set<std::string> known;
  for (const auto& c : data.classes) known.insert(c.id);
  std::unordered_set<std::string> seen(split.seen.begin(), split.seen.end());
  for (const auto& id : split.seen) {
    if (!known.count(id)) throw DataError("split names unknown class '" + id + "'");
  }
  for (const auto& id : split.unseen) {
    if (!known.count(id)) throw DataError("split names unknown class '" + id + "'");
    if (seen.count(id)) throw DataError("class '" + id + "' is both seen and unseen");
  }
  if (split.seen.empty()) throw DataError("split has an empty seen set");
  if (split.unseen.empty()) throw DataError("split has an empty unseen set");
  if (split.seen.size() + split.unseen.size() != data.classes.size()) {
    throw DataError("split does not cover the class set");
  }
}

}  // namespace

TrainResult train(const RunConfig& cfg, const Dataset& data, const Split& split,
                  const WordEmbeddingTable& table, std::size_t split_index) {
  if (cfg.epochs == 0 || cfg.batch_size == 0) {
    throw ConfigError("train: epochs and batch_size must be positive");
  }
  check_split(data, split);
  const std::unordered_set<std::string> seen_set(split.seen.begin(), split.seen.end());

  // Seen classes and samples, in dataset order.
  std::vector<std::pair<std::string, std::string>> seen_classes;
  for (const auto& c : data.classes) {
    if (seen_set.count(c.id)) seen_classes.emplace_back(c.id, c.name);
  }
  std::vector<std::size_t> sample_idx;
  std::unordered_map<std::string, std::size_t> per_class_count;
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    if (seen_set.count(data.features[i].class_id)) {
      sample_idx.push_back(i);
      per_class_count[data.features[i].class_id] += 1;
    }
  }
  for (const auto& [id, name] : seen_classes) {
    (void)name;
    if (per_class_count[id] == 0) {
      throw DataError("seen class '" + id + "' has no training samples");
    }
  }

  TrainResult result;
  result.seen_semantics = embed_class_set(table, seen_classes);

  if (cfg.mode != ModelMode::baseline) {
    if (data.detections.empty()) {
      throw DataError("missing privileged information: the dataset has no detection records");
    }
    std::vector<DetectionRecord> seen_dets;
    for (const auto& rec : data.detections) {
      if (seen_set.count(rec.class_id)) seen_dets.push_back(rec);
    }
    std::vector<std::string> seen_ids;
    for (const auto& [id, name] : seen_classes) {
      (void)name;
      seen_ids.push_back(id);
    }
    ObjectAggregationConfig agg{cfg.frames_per_clip, cfg.top_k_per_clip, cfg.top_m_per_class};
    result.object_semantics = embed_objects(table, aggregate_objects(seen_dets, seen_ids, agg));
  }

  ModelConfig mcfg;
  mcfg.backbone_dim = data.backbone_dim;
  mcfg.semantic_dim = table.dim;
  mcfg.attention_tokens = cfg.attention_tokens;
  mcfg.attention_key_dim = cfg.attention_key_dim;
  mcfg.hallucinator_hidden = cfg.hallucinator_hidden;
  mcfg.mode = cfg.mode;
  mcfg.fusion = cfg.fusion;
  mcfg.init_seed = mix_seed(cfg.seed, kInitStreamBase + split_index);
  result.params = init_model(mcfg);

  if (cfg.mode == ModelMode::pi_train_only) {
    // Test-time surrogate: the mean of all seen-class object semantics.
    const auto& pi = *result.object_semantics;
    std::vector<double> surrogate(table.dim, 0.0);
    for (std::size_t r = 0; r < pi.size(); ++r) {
      const double* row = pi.vectors.data() + r * table.dim;
      for (std::size_t j = 0; j < table.dim; ++j) surrogate[j] += row[j];
    }
    for (auto& x : surrogate) x /= static_cast<double>(pi.size());
    result.params.surrogate_object = std::move(surrogate);
  }

  auto trainable = result.params.trainable();
  AdamState opt(std::span<Parameter* const>(trainable), cfg.base_lr);
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, kShuffleStreamBase + split_index));

  const ObjectSemantics* pi =
      result.object_semantics ? &*result.object_semantics : nullptr;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(cfg.base_lr, epoch);
    std::shuffle(sample_idx.begin(), sample_idx.end(), shuffle_rng);

    double sum_total = 0.0, sum_action = 0.0, sum_hall = 0.0;
    for (std::size_t start = 0; start < sample_idx.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, sample_idx.size() - start);
      std::vector<double> flat;
      flat.reserve(bsz * data.backbone_dim);
      std::vector<std::string> ids;
      ids.reserve(bsz);
      for (std::size_t k = 0; k < bsz; ++k) {
        const auto& f = data.features[sample_idx[start + k]];
        flat.insert(flat.end(), f.values.begin(), f.values.end());
        ids.push_back(f.class_id);
      }
      Tensor x = Tensor::unchecked({bsz, data.backbone_dim}, std::move(flat));

      Tape tape;
      auto losses = forward_train(tape, result.params, x, ids, result.seen_semantics, pi);
      const double total = tape.value(losses.total).data()[0];
      const double action = tape.value(losses.action).data()[0];
      const double hall =
          losses.has_hallucination_loss ? tape.value(losses.hallucinate).data()[0] : 0.0;
      if (!std::isfinite(total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / cfg.batch_size));
      }
      sum_total += total * static_cast<double>(bsz);
      sum_action += action * static_cast<double>(bsz);
      sum_hall += hall * static_cast<double>(bsz);

      tape.backward(losses.total);
      adam_step(std::span<Parameter* const>(trainable), opt, lr);
    }
    const double n = static_cast<double>(sample_idx.size());
    result.trace.push_back({epoch, lr, sum_total / n, sum_action / n, sum_hall / n});
  }
  return result;
}

}  // namespace zsar
