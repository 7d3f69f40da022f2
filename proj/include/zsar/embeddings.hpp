#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zsar/tensor.hpp"

namespace zsar {

// Word-embedding lookup table parsed from the word2vec text format.
// Tokens are stored lowercase; every vector has exactly `dim` components.
struct WordEmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  bool contains(const std::string& token) const { return entries.count(token) > 0; }
  std::size_t size() const { return entries.size(); }
};

// Per-class semantic vectors in input class order; `vectors` is C x dim.
struct ClassSemantics {
  std::vector<std::string> class_ids;
  Tensor vectors;

  std::size_t size() const { return class_ids.size(); }
  std::size_t dim() const { return vectors.cols(); }
  std::vector<double> row(std::size_t i) const;
  std::size_t index_of(const std::string& class_id) const;  // throws DataError if absent
};

// Per-class object names and their averaged embedding (the privileged
// information used during training).
struct ObjectSemantics {
  std::vector<std::string> class_ids;
  std::vector<std::vector<std::string>> object_lists;
  Tensor vectors;

  std::size_t size() const { return class_ids.size(); }
  std::size_t dim() const { return vectors.cols(); }
  std::vector<double> row(std::size_t i) const;
  std::size_t index_of(const std::string& class_id) const;
};

struct ObjectAggregationConfig {
  std::size_t frames_per_clip = 8;  // provenance only; detections arrive pre-extracted
  std::size_t top_k_per_clip = 20;
  std::size_t top_m_per_class = 5;
};

// One clip's object detections for a seen-class video.
struct DetectionRecord {
  std::string video_id;
  std::string class_id;
  std::vector<std::pair<std::string, double>> labels;  // (object name, probability)
};

// Parses "<count> <dim>" followed by "<token> v1 .. vdim" lines.
// Errors carry 1-based line numbers.
WordEmbeddingTable load_embedding_table(const std::string& path);

// Lowercases and splits on whitespace, underscores, hyphens and
// lower-to-upper camel-case boundaries; tokens without any alphanumeric
// character are dropped. Throws DataError if nothing is left.
std::vector<std::string> tokenize_label(const std::string& raw);

// Mean of the embeddings of the tokens found in the table; missing tokens
// are skipped, and only a fully unresolvable phrase is an error.
std::vector<double> embed_phrase(const WordEmbeddingTable& table,
                                 const std::vector<std::string>& tokens);

ClassSemantics embed_class_set(const WordEmbeddingTable& table,
                               const std::vector<std::pair<std::string, std::string>>& classes);

// Per clip keep the top-k labels by probability (ties broken by name), then
// per class rank names by the number of kept lists they appear in (frequency
// ties broken by name) and keep the top m. Every class in `class_ids` must
// have at least one record. Results follow `class_ids` order.
std::vector<std::pair<std::string, std::vector<std::string>>> aggregate_objects(
    const std::vector<DetectionRecord>& detections, const std::vector<std::string>& class_ids,
    const ObjectAggregationConfig& cfg);

// Object semantics: per class the mean of the phrase embeddings of its
// object names (multi-word names are tokenized and averaged first).
ObjectSemantics embed_objects(
    const WordEmbeddingTable& table,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& object_lists);

}  // namespace zsar
