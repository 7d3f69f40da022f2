#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "zsar/config.hpp"
#include "zsar/dataset.hpp"
#include "zsar/model.hpp"
#include "zsar/splits.hpp"

namespace zsar {

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_action = 0.0;
  double loss_hallucinate = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> trace;
  ClassSemantics seen_semantics;
  std::optional<ObjectSemantics> object_semantics;
};

// Trains one split: seeded shuffled mini-batches (last partial batch kept),
// Adam at the scheduled learning rate, losses per forward_train. The model
// init and shuffle streams derive from (cfg.seed, split_index) so a given
// benchmark split retrains identically on its own. Non-finite losses raise
// NumericError. Only seen-class samples and seen-class detections are used.
TrainResult train(const RunConfig& cfg, const Dataset& data, const Split& split,
                  const WordEmbeddingTable& table, std::size_t split_index = 0);

}  // namespace zsar
