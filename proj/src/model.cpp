#include "zsar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "zsar/errors.hpp"

namespace zsar {

ModelMode model_mode_from_string(const std::string& s) {
  if (s == "baseline") return ModelMode::baseline;
  if (s == "pi_train_only" || s == "pi-train-only") return ModelMode::pi_train_only;
  if (s == "full") return ModelMode::full;
  throw ConfigError("unknown model mode '" + s + "' (expected baseline|pi_train_only|full)");
}

std::string to_string(ModelMode m) {
  switch (m) {
    case ModelMode::baseline: return "baseline";
    case ModelMode::pi_train_only: return "pi_train_only";
    case ModelMode::full: return "full";
  }
  throw std::logic_error("unreachable model mode");
}

std::vector<Parameter*> ModelParams::trainable() {
  std::vector<Parameter*> out;
  out.push_back(&action_head.weight);
  out.push_back(&action_head.bias);
  for (auto& layer : hallucinator) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (auto* p : attention.parameters()) out.push_back(p);
  if (concat_proj) out.push_back(&*concat_proj);
  return out;
}

std::vector<const Parameter*> ModelParams::trainable() const {
  auto list = const_cast<ModelParams*>(this)->trainable();
  return std::vector<const Parameter*>(list.begin(), list.end());
}

ModelParams init_model(const ModelConfig& cfg) {
  if (cfg.backbone_dim == 0 || cfg.semantic_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  std::mt19937_64 rng(cfg.init_seed);
  ModelParams p;
  p.config = cfg;

  auto make_layer = [&rng](const std::string& name, std::size_t in, std::size_t out) {
    LinearLayer layer;
    layer.weight = uniform_parameter<double>(name + ".weight", {in, out}, in, rng);
    layer.bias = zero_parameter<double>(name + ".bias", {out});
    return layer;
  };

  p.action_head = make_layer("action_head", cfg.backbone_dim, cfg.semantic_dim);

  std::vector<std::size_t> widths = {cfg.backbone_dim, cfg.hallucinator_hidden[0],
                                     cfg.hallucinator_hidden[1], cfg.hallucinator_hidden[2],
                                     cfg.semantic_dim};
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    p.hallucinator.push_back(
        make_layer("hallucinator." + std::to_string(i), widths[i], widths[i + 1]));
  }

  p.attention =
      make_attention_params(cfg.semantic_dim, cfg.attention_tokens, cfg.attention_key_dim, rng);

  if (cfg.fusion == FusionMode::concat) {
    p.concat_proj = uniform_parameter<double>("concat_proj", {2 * cfg.semantic_dim, cfg.semantic_dim},
                                              2 * cfg.semantic_dim, rng);
  }
  return p;
}

NodeId action_head(Tape& tape, ModelParams& params, NodeId features) {
  const Tensor& x = tape.value(features);
  if (x.cols() != params.config.backbone_dim) {
    throw std::invalid_argument("action_head: feature width " + std::to_string(x.cols()) +
                                " does not match backbone_dim " +
                                std::to_string(params.config.backbone_dim));
  }
  return tape.linear(features, tape.leaf(params.action_head.weight),
                     tape.leaf(params.action_head.bias));
}

NodeId hallucinate(Tape& tape, ModelParams& params, NodeId features) {
  const Tensor& x = tape.value(features);
  if (x.cols() != params.config.backbone_dim) {
    throw std::invalid_argument("hallucinate: feature width " + std::to_string(x.cols()) +
                                " does not match backbone_dim " +
                                std::to_string(params.config.backbone_dim));
  }
  NodeId h = features;
  for (std::size_t i = 0; i < params.hallucinator.size(); ++i) {
    auto& layer = params.hallucinator[i];
    h = tape.linear(h, tape.leaf(layer.weight), tape.leaf(layer.bias));
    if (i + 1 < params.hallucinator.size()) h = tape.relu(h);
  }
  return h;
}

namespace {

// Gathers the per-sample semantic rows for a batch of class ids.
Tensor gather_rows(const std::vector<std::string>& class_ids,
                   const std::vector<std::string>& index, const Tensor& matrix,
                   const char* what) {
  std::unordered_map<std::string, std::size_t> lookup;
  lookup.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) lookup.emplace(index[i], i);
  const std::size_t dim = matrix.cols();
  std::vector<double> flat;
  flat.reserve(class_ids.size() * dim);
  for (const auto& id : class_ids) {
    auto it = lookup.find(id);
    if (it == lookup.end()) {
      throw DataError(std::string("missing ") + what + " for class '" + id + "'");
    }
    const double* row = matrix.data() + it->second * dim;
    flat.insert(flat.end(), row, row + dim);
  }
  return Tensor::unchecked({class_ids.size(), dim}, std::move(flat));
}

// Fusion of a batch of visual features with a batch of object inputs,
// dispatching on the configured fusion mode.
NodeId fuse_batch(Tape& tape, ModelParams& params, NodeId visual, NodeId object) {
  if (params.config.fusion != FusionMode::cross_attention) {
    return fuse_ablation(tape, visual, object, params.config.fusion,
                         params.concat_proj ? &*params.concat_proj : nullptr);
  }
  const std::size_t batch = tape.value(visual).rows();
  std::vector<NodeId> fused_rows;
  fused_rows.reserve(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    auto att = mutual_attention(tape, params.attention, tape.row(visual, r), tape.row(object, r));
    fused_rows.push_back(fuse_add(tape, att.visual_attended, att.object_attended));
  }
  if (batch == 1) return fused_rows[0];
  return tape.stack_rows(fused_rows);
}

}  // namespace

TrainLossNodes forward_train(Tape& tape, ModelParams& params, const Tensor& features,
                             const std::vector<std::string>& class_ids,
                             const ClassSemantics& semantics, const ObjectSemantics* pi) {
  if (features.rows() != class_ids.size()) {
    throw std::invalid_argument("forward_train: batch size mismatch between features and labels");
  }
  const Tensor targets =
      gather_rows(class_ids, semantics.class_ids, semantics.vectors, "class semantics");

  NodeId x = tape.constant(features);
  NodeId visual = action_head(tape, params, x);

  TrainLossNodes out{};
  if (params.config.mode == ModelMode::baseline) {
    out.action = tape.squared_l2_loss(visual, tape.constant(targets));
    out.hallucinate = out.action;
    out.total = out.action;
    return out;
  }

  if (pi == nullptr) {
    throw DataError("missing privileged information: mode '" + to_string(params.config.mode) +
                    "' trains with object semantics");
  }
  const Tensor object_rows = gather_rows(class_ids, pi->class_ids, pi->vectors, "object semantics");
  NodeId object = tape.constant(object_rows);
  NodeId fused = fuse_batch(tape, params, visual, object);
  out.action = tape.squared_l2_loss(fused, tape.constant(targets));

  if (params.config.mode == ModelMode::full) {
    NodeId imitation = hallucinate(tape, params, x);
    out.hallucinate = tape.squared_l2_loss(imitation, object);
    out.total = tape.add(out.action, out.hallucinate);
    out.has_hallucination_loss = true;
  } else {
    out.hallucinate = out.action;
    out.total = out.action;
  }
  return out;
}

std::vector<double> forward_test(ModelParams& params, const std::vector<double>& feature) {
  if (feature.size() != params.config.backbone_dim) {
    throw std::invalid_argument("forward_test: feature width " + std::to_string(feature.size()) +
                                " does not match backbone_dim " +
                                std::to_string(params.config.backbone_dim));
  }
  Tape tape;
  NodeId x = tape.constant(Tensor::row_matrix(feature));
  NodeId visual = action_head(tape, params, x);

  NodeId result = visual;
  switch (params.config.mode) {
    case ModelMode::baseline:
      break;
    case ModelMode::pi_train_only: {
      if (!params.surrogate_object) {
        throw DataError("pi_train_only model has no surrogate object semantics; retrain or "
                        "load a checkpoint that carries one");
      }
      NodeId object = tape.constant(Tensor::row_matrix(*params.surrogate_object));
      result = fuse_batch(tape, params, visual, object);
      break;
    }
    case ModelMode::full: {
      NodeId object = hallucinate(tape, params, x);
      result = fuse_batch(tape, params, visual, object);
      break;
    }
  }
  const Tensor& v = tape.value(result);
  return std::vector<double>(v.data(), v.data() + v.numel());
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_distance: width mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine distance undefined for a zero-norm vector");
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::string> predict(const std::vector<double>& query, const ClassSemantics& semantics,
                                 std::size_t top_n) {
  const std::size_t n = semantics.size();
  if (top_n > n) {
    throw std::invalid_argument("predict: top_n " + std::to_string(top_n) + " exceeds " +
                                std::to_string(n) + " classes");
  }
  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    ranked[i] = {cosine_distance(query, semantics.row(i)), i};
  }
  // stable: distance ties keep class-list order
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  out.reserve(top_n);
  for (std::size_t i = 0; i < top_n; ++i) out.push_back(semantics.class_ids[ranked[i].second]);
  return out;
}

}  // namespace zsar
