#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zsar/autodiff.hpp"
#include "zsar/embeddings.hpp"
#include "zsar/fusion.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// baseline: plain map from visual feature to the semantic space.
// pi_train_only: object semantics fused during training only; at test the
//   fusion consumes a fixed surrogate (mean of seen-class object semantics).
// full: a hallucination network supplies the object input at test time.
enum class ModelMode { baseline, pi_train_only, full };

ModelMode model_mode_from_string(const std::string& s);
std::string to_string(ModelMode m);

struct ModelConfig {
  std::size_t backbone_dim = 512;
  std::size_t semantic_dim = 300;
  std::size_t attention_tokens = 10;
  std::size_t attention_key_dim = 0;  // 0 -> token width
  std::array<std::size_t, 3> hallucinator_hidden = {512, 512, 512};
  ModelMode mode = ModelMode::full;
  FusionMode fusion = FusionMode::cross_attention;
  std::uint64_t init_seed = 1;
};

struct LinearLayer {
  Parameter weight;
  Parameter bias;
};

// All trainable state plus the mode flags needed to run it.
struct ModelParams {
  ModelConfig config;
  LinearLayer action_head;               // backbone_dim -> semantic_dim
  std::vector<LinearLayer> hallucinator;  // four layers, relu between hidden ones
  AttentionParams attention;
  std::optional<Parameter> concat_proj;  // 2*dim -> dim, concat fusion only
  std::optional<std::vector<double>> surrogate_object;  // pi_train_only test input

  std::vector<Parameter*> trainable();  // fixed manifest order
  std::vector<const Parameter*> trainable() const;
};

ModelParams init_model(const ModelConfig& cfg);

// Linear map of a batch of backbone features into the semantic space.
NodeId action_head(Tape& tape, ModelParams& params, NodeId features);

// Four fully connected layers imitating the object semantics; no
// activation on the output layer.
NodeId hallucinate(Tape& tape, ModelParams& params, NodeId features);

struct TrainLossNodes {
  NodeId action;
  NodeId hallucinate;  // == action in modes without a hallucination loss
  NodeId total;
  bool has_hallucination_loss = false;
};

// Joint training loss over one batch. class_ids selects per-sample rows of
// the seen-class semantics and object semantics. The hallucination loss is
// present in full mode only; the action loss never touches the hallucinator
// (the fusion consumes the true object semantics during training).
TrainLossNodes forward_train(Tape& tape, ModelParams& params, const Tensor& features,
                             const std::vector<std::string>& class_ids,
                             const ClassSemantics& semantics, const ObjectSemantics* pi);

// Joint test-time representation for one sample.
std::vector<double> forward_test(ModelParams& params, const std::vector<double>& feature);

// 1 - a.b / (|a| |b|), in [0, 2]. Zero-norm inputs are an error.
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

// Class ids sorted by ascending cosine distance to the query; distance ties
// keep the semantics' class order. top_n must not exceed the class count.
std::vector<std::string> predict(const std::vector<double>& query, const ClassSemantics& semantics,
                                 std::size_t top_n);

}  // namespace zsar
