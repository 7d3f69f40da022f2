#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zsar/autodiff.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

enum class FusionMode { multiply, concat, add, cross_attention };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode m);

// Mutual-attention projections. A feature vector of width dim is reshaped
// into `tokens` rows of dim/tokens values; queries/keys project to key_dim
// and values back to token_dim so the attended output flattens to dim.
// All six projections are independently parameterized.
struct AttentionParams {
  std::size_t dim = 300;
  std::size_t tokens = 10;
  std::size_t token_dim = 30;
  std::size_t key_dim = 30;

  Parameter query_visual;   // token_dim x key_dim
  Parameter key_visual;     // token_dim x key_dim
  Parameter value_visual;   // token_dim x token_dim
  Parameter query_object;   // token_dim x key_dim
  Parameter key_object;     // token_dim x key_dim
  Parameter value_object;   // token_dim x token_dim

  std::vector<Parameter*> parameters();
};

// tokens must divide dim; key_dim of 0 defaults to the token width.
AttentionParams make_attention_params(std::size_t dim, std::size_t tokens, std::size_t key_dim,
                                      std::mt19937_64& rng);

// Row-major reshape of a width-dim vector into tokens x (dim/tokens).
Tensor tokenize_vector(const std::vector<double>& values, std::size_t tokens);

struct MutualAttentionNodes {
  NodeId visual_attended;     // 1 x dim
  NodeId object_attended;     // 1 x dim
  NodeId weights_on_visual;   // tokens x tokens, rows sum to 1
  NodeId weights_on_object;   // tokens x tokens
};

// Cross-attention between a visual feature and an object semantic, both
// 1 x dim nodes. Object queries attend over visual keys/values and vice
// versa; scores are scaled by 1/sqrt(key_dim) before the softmax.
// Params are non-const because backward() accumulates into their grads.
MutualAttentionNodes mutual_attention(Tape& tape, AttentionParams& p, NodeId visual,
                                      NodeId object);

// Elementwise sum of the two attended features.
NodeId fuse_add(Tape& tape, NodeId a, NodeId b);

// Ablation fusions over raw features: elementwise product, elementwise sum,
// or concatenation mapped back to dim by a learned 2*dim -> dim projection.
NodeId fuse_ablation(Tape& tape, NodeId visual, NodeId object, FusionMode mode,
                     Parameter* concat_proj);

}  // namespace zsar
