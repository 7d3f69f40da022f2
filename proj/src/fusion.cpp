#include "zsar/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "zsar/errors.hpp"

namespace zsar {

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "multiply") return FusionMode::multiply;
  if (s == "concat") return FusionMode::concat;
  if (s == "add") return FusionMode::add;
  if (s == "cross_attention" || s == "cross-attention") return FusionMode::cross_attention;
  throw ConfigError("unknown fusion mode '" + s +
                    "' (expected multiply|concat|add|cross_attention)");
}

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::multiply: return "multiply";
    case FusionMode::concat: return "concat";
    case FusionMode::add: return "add";
    case FusionMode::cross_attention: return "cross_attention";
  }
  throw std::logic_error("unreachable fusion mode");
}

std::vector<Parameter*> AttentionParams::parameters() {
  return {&query_visual, &key_visual, &value_visual,
          &query_object, &key_object, &value_object};
}

AttentionParams make_attention_params(std::size_t dim, std::size_t tokens, std::size_t key_dim,
                                      std::mt19937_64& rng) {
  if (tokens == 0 || dim % tokens != 0) {
    throw ConfigError("attention token count " + std::to_string(tokens) +
                      " must divide the semantic dimension " + std::to_string(dim));
  }
  AttentionParams p;
  p.dim = dim;
  p.tokens = tokens;
  p.token_dim = dim / tokens;
  p.key_dim = key_dim == 0 ? p.token_dim : key_dim;
  const std::size_t td = p.token_dim, kd = p.key_dim;
  p.query_visual = uniform_parameter<double>("attention.query_visual", {td, kd}, td, rng);
  p.key_visual = uniform_parameter<double>("attention.key_visual", {td, kd}, td, rng);
  p.value_visual = uniform_parameter<double>("attention.value_visual", {td, td}, td, rng);
  p.query_object = uniform_parameter<double>("attention.query_object", {td, kd}, td, rng);
  p.key_object = uniform_parameter<double>("attention.key_object", {td, kd}, td, rng);
  p.value_object = uniform_parameter<double>("attention.value_object", {td, td}, td, rng);
  return p;
}

Tensor tokenize_vector(const std::vector<double>& values, std::size_t tokens) {
  if (tokens == 0 || values.size() % tokens != 0) {
    throw std::invalid_argument("tokenize_vector: " + std::to_string(tokens) +
                                " tokens do not divide a vector of width " +
                                std::to_string(values.size()));
  }
  return Tensor({tokens, values.size() / tokens}, values);
}

MutualAttentionNodes mutual_attention(Tape& tape, AttentionParams& p, NodeId visual,
                                      NodeId object) {
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(p.key_dim));

  NodeId vis_tok = tape.reshape(visual, {p.tokens, p.token_dim});
  NodeId obj_tok = tape.reshape(object, {p.tokens, p.token_dim});

  NodeId q_v = tape.matmul(vis_tok, tape.leaf(p.query_visual));
  NodeId k_v = tape.matmul(vis_tok, tape.leaf(p.key_visual));
  NodeId v_v = tape.matmul(vis_tok, tape.leaf(p.value_visual));
  NodeId q_o = tape.matmul(obj_tok, tape.leaf(p.query_object));
  NodeId k_o = tape.matmul(obj_tok, tape.leaf(p.key_object));
  NodeId v_o = tape.matmul(obj_tok, tape.leaf(p.value_object));

  // Object queries retrieve from visual keys/values; visual queries from
  // object keys/values.
  NodeId w_on_visual = tape.softmax_rows(tape.scale(tape.matmul_transposed(q_o, k_v), inv_sqrt_dk));
  NodeId w_on_object = tape.softmax_rows(tape.scale(tape.matmul_transposed(q_v, k_o), inv_sqrt_dk));

  NodeId visual_attended = tape.reshape(tape.matmul(w_on_visual, v_v), {1, p.dim});
  NodeId object_attended = tape.reshape(tape.matmul(w_on_object, v_o), {1, p.dim});

  return {visual_attended, object_attended, w_on_visual, w_on_object};
}

NodeId fuse_add(Tape& tape, NodeId a, NodeId b) { return tape.add(a, b); }

NodeId fuse_ablation(Tape& tape, NodeId visual, NodeId object, FusionMode mode,
                     Parameter* concat_proj) {
  switch (mode) {
    case FusionMode::multiply:
      return tape.mul(visual, object);
    case FusionMode::add:
      return tape.add(visual, object);
    case FusionMode::concat: {
      if (concat_proj == nullptr) {
        throw ConfigError("concat fusion requires the learned concat projection");
      }
      return tape.matmul(tape.concat_cols(visual, object), tape.leaf(*concat_proj));
    }
    case FusionMode::cross_attention:
      throw std::invalid_argument("fuse_ablation: cross_attention is not an ablation fusion");
  }
  throw std::logic_error("unreachable fusion mode");
}

}  // namespace zsar
