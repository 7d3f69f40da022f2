#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "zsar/checkpoint.hpp"
#include "zsar/config.hpp"
#include "zsar/dataset.hpp"
#include "zsar/errors.hpp"
#include "zsar/evaluate.hpp"
#include "zsar/optim.hpp"
#include "zsar/splits.hpp"
#include "zsar/synth.hpp"
#include "zsar/train.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 numerical failure.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

struct RunFlags {
  std::string config_path;
  zsar::RunConfig cfg;

  std::string embeddings, classes, features, detections, out;
  std::size_t seen_count = 0, n_splits = 0, epochs = 0, batch_size = 0;
  std::size_t tokens = 0, key_dim = 0, frames = 0, top_k = 0, top_m = 0;
  double lr = 0.0;
  std::string mode, fusion;
  std::vector<std::size_t> hidden;
  std::uint64_t seed = 0;
};

// Registers the RunConfig-mirroring flags on a subcommand. Flags the user
// sets override values read from --config.
void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its values");
  cmd->add_option("--embeddings", f.embeddings, "word2vec text embedding table");
  cmd->add_option("--classes", f.classes, "class list csv (class_id,name)");
  cmd->add_option("--features", f.features, "backbone feature csv");
  cmd->add_option("--detections", f.detections, "object detections jsonl");
  cmd->add_option("--seen-count", f.seen_count, "seen classes per split");
  cmd->add_option("--n-splits", f.n_splits, "number of random splits");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--lr", f.lr, "base learning rate (halved every 5 epochs)");
  cmd->add_option("--mode", f.mode, "baseline | pi_train_only | full");
  cmd->add_option("--fusion", f.fusion, "multiply | concat | add | cross_attention");
  cmd->add_option("--tokens", f.tokens, "attention token count");
  cmd->add_option("--key-dim", f.key_dim, "attention key width (0: token width)");
  cmd->add_option("--hidden", f.hidden, "hallucinator hidden widths (3 values)")->expected(3);
  cmd->add_option("--frames-per-clip", f.frames, "frames per clip (provenance)");
  cmd->add_option("--top-k", f.top_k, "objects kept per clip");
  cmd->add_option("--top-m", f.top_m, "objects kept per class");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

zsar::RunConfig resolve_config(const CLI::App* cmd, const RunFlags& f) {
  zsar::RunConfig cfg;
  if (!f.config_path.empty()) cfg = zsar::load_run_config(f.config_path);
  if (cmd->count("--embeddings")) cfg.embeddings_path = f.embeddings;
  if (cmd->count("--classes")) cfg.classes_path = f.classes;
  if (cmd->count("--features")) cfg.features_path = f.features;
  if (cmd->count("--detections")) cfg.detections_path = f.detections;
  if (cmd->count("--seen-count")) cfg.seen_count = f.seen_count;
  if (cmd->count("--n-splits")) cfg.n_splits = f.n_splits;
  if (cmd->count("--epochs")) cfg.epochs = f.epochs;
  if (cmd->count("--batch-size")) cfg.batch_size = f.batch_size;
  if (cmd->count("--lr")) cfg.base_lr = f.lr;
  if (cmd->count("--mode")) cfg.mode = zsar::model_mode_from_string(f.mode);
  if (cmd->count("--fusion")) cfg.fusion = zsar::fusion_mode_from_string(f.fusion);
  if (cmd->count("--tokens")) cfg.attention_tokens = f.tokens;
  if (cmd->count("--key-dim")) cfg.attention_key_dim = f.key_dim;
  if (cmd->count("--hidden")) cfg.hallucinator_hidden = {f.hidden[0], f.hidden[1], f.hidden[2]};
  if (cmd->count("--frames-per-clip")) cfg.frames_per_clip = f.frames;
  if (cmd->count("--top-k")) cfg.top_k_per_clip = f.top_k;
  if (cmd->count("--top-m")) cfg.top_m_per_class = f.top_m;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--out")) cfg.out_dir = f.out;
  return cfg;
}

void require_paths(const zsar::RunConfig& cfg, bool need_detections) {
  auto check = [](const std::string& path, const char* what) {
    if (path.empty()) throw zsar::ConfigError(std::string(what) + " is required");
    if (!std::filesystem::exists(path)) {
      throw zsar::ConfigError(std::string(what) + " '" + path + "' does not exist");
    }
  };
  check(cfg.embeddings_path, "--embeddings");
  check(cfg.classes_path, "--classes");
  check(cfg.features_path, "--features");
  if (need_detections && cfg.mode != zsar::ModelMode::baseline) {
    check(cfg.detections_path, "--detections");
  }
}

int cmd_splits(const std::string& classes_path, std::size_t seen_count, std::size_t n_splits,
               std::uint64_t seed, const std::string& out) {
  auto classes = zsar::load_classes(classes_path);
  std::vector<std::string> ids;
  for (const auto& c : classes) ids.push_back(c.id);
  auto splits = zsar::generate_splits(ids, seen_count, n_splits, seed);
  zsar::save_splits(splits, seen_count, seed, out);
  std::cout << "wrote " << splits.size() << " splits (" << seen_count << "/"
            << ids.size() - seen_count << ") to " << out << "\n";
  return kOk;
}

int cmd_train(const CLI::App* cmd, const RunFlags& f, const std::string& splits_path,
              std::size_t split_index) {
  zsar::RunConfig cfg = resolve_config(cmd, f);
  require_paths(cfg, true);
  if (cfg.out_dir.empty()) throw zsar::ConfigError("--out directory is required");

  auto table = zsar::load_embedding_table(cfg.embeddings_path);
  auto data = zsar::load_dataset(cfg.classes_path, cfg.features_path, cfg.detections_path);
  auto splits = zsar::load_splits(splits_path);
  if (split_index >= splits.size()) {
    throw zsar::ConfigError("--split-index " + std::to_string(split_index) +
                            " out of range: file has " + std::to_string(splits.size()));
  }

  auto result = zsar::train(cfg, data, splits[split_index], table, split_index);

  std::filesystem::create_directories(cfg.out_dir);
  zsar::save_checkpoint(result.params, cfg.epochs, cfg.out_dir + "/checkpoint.json");

  json trace = json::array();
  for (const auto& e : result.trace) {
    trace.push_back({{"epoch", e.epoch},
                     {"lr", e.lr},
                     {"loss", e.loss_total},
                     {"loss_action", e.loss_action},
                     {"loss_hallucinate", e.loss_hallucinate}});
    std::cout << "epoch " << e.epoch << ": lr " << e.lr << " loss " << e.loss_total
              << " (action " << e.loss_action << ", hallucinate " << e.loss_hallucinate << ")\n";
  }
  std::ofstream tout(cfg.out_dir + "/train_trace.json");
  tout << trace.dump(2) << "\n";
  std::cout << "checkpoint written to " << cfg.out_dir << "/checkpoint.json\n";
  return kOk;
}

int cmd_evaluate(const CLI::App* cmd, const RunFlags& f, const std::string& checkpoint_path,
                 const std::string& splits_path, std::size_t split_index) {
  zsar::RunConfig cfg = resolve_config(cmd, f);
  require_paths(cfg, false);

  auto table = zsar::load_embedding_table(cfg.embeddings_path);
  auto data = zsar::load_dataset(cfg.classes_path, cfg.features_path);
  auto splits = zsar::load_splits(splits_path);
  if (split_index >= splits.size()) {
    throw zsar::ConfigError("--split-index out of range");
  }
  auto loaded = zsar::load_checkpoint(checkpoint_path);
  auto semantics = zsar::embed_class_set(table, data.class_pairs());
  auto score = zsar::evaluate(loaded.params, data, splits[split_index], semantics);
  std::cout << "top1 " << score.top1 << "\ntop5 " << score.top5 << "\n";
  return kOk;
}

int cmd_benchmark(const CLI::App* cmd, const RunFlags& f) {
  zsar::RunConfig cfg = resolve_config(cmd, f);
  require_paths(cfg, true);
  if (cfg.out_dir.empty()) throw zsar::ConfigError("--out directory is required");

  auto report = zsar::run_benchmark(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  zsar::write_report_json(report, cfg.out_dir + "/report.json");
  zsar::write_report_csv(report, cfg.out_dir + "/report.csv");
  std::cout << zsar::format_report(report);
  std::cout << "report written to " << cfg.out_dir << "/report.json\n";
  return kOk;
}

int cmd_aggregate(const std::string& detections_path, const std::string& classes_path,
                  std::size_t top_k, std::size_t top_m, const std::string& out) {
  auto classes = zsar::load_classes(classes_path);
  auto detections = zsar::load_detections(detections_path, classes);
  std::vector<std::string> ids;
  for (const auto& c : classes) ids.push_back(c.id);
  zsar::ObjectAggregationConfig cfg;
  cfg.top_k_per_clip = top_k;
  cfg.top_m_per_class = top_m;
  auto lists = zsar::aggregate_objects(detections, ids, cfg);
  json j;
  for (const auto& [id, names] : lists) j[id] = names;
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os(out);
    if (!os) throw zsar::DataError("cannot write '" + out + "'");
    os << j.dump(2) << "\n";
    std::cout << "wrote object lists for " << lists.size() << " classes to " << out << "\n";
  }
  return kOk;
}

int cmd_embed_classes(const std::string& embeddings_path, const std::string& classes_path,
                      const std::string& out) {
  auto table = zsar::load_embedding_table(embeddings_path);
  auto classes = zsar::load_classes(classes_path);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& c : classes) pairs.emplace_back(c.id, c.name);
  auto sem = zsar::embed_class_set(table, pairs);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw zsar::DataError("cannot write '" + out + "'");
    os = &file;
  }
  (*os) << "class_id";
  for (std::size_t j = 0; j < sem.dim(); ++j) (*os) << ",v" << j;
  (*os) << "\n";
  os->precision(17);
  for (std::size_t i = 0; i < sem.size(); ++i) {
    (*os) << sem.class_ids[i];
    for (double v : sem.row(i)) (*os) << "," << v;
    (*os) << "\n";
  }
  if (!out.empty()) std::cout << "wrote " << sem.size() << " class vectors to " << out << "\n";
  return kOk;
}

int cmd_gradcheck(std::size_t backbone_dim, std::size_t semantic_dim, std::size_t tokens,
                  std::size_t key_dim, std::vector<std::size_t> hidden, const std::string& mode,
                  const std::string& fusion, std::size_t batch, double eps, double tolerance,
                  std::size_t samples, std::uint64_t seed) {
  zsar::ModelConfig mcfg;
  mcfg.backbone_dim = backbone_dim;
  mcfg.semantic_dim = semantic_dim;
  mcfg.attention_tokens = tokens;
  mcfg.attention_key_dim = key_dim;
  if (hidden.size() == 3) mcfg.hallucinator_hidden = {hidden[0], hidden[1], hidden[2]};
  mcfg.mode = zsar::model_mode_from_string(mode);
  mcfg.fusion = zsar::fusion_mode_from_string(fusion);
  mcfg.init_seed = seed;
  zsar::ModelParams params = zsar::init_model(mcfg);

  std::mt19937_64 rng(zsar::mix_seed(seed, 17));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  zsar::Tensor x({batch, backbone_dim});
  for (auto& v : x.values()) v = dist(rng);
  zsar::ClassSemantics sem;
  zsar::ObjectSemantics pi;
  std::vector<std::string> batch_ids;
  sem.class_ids = {"a", "b"};
  pi.class_ids = {"a", "b"};
  pi.object_lists = {{"o1"}, {"o2"}};
  zsar::Tensor sem_rows({2, semantic_dim});
  zsar::Tensor pi_rows({2, semantic_dim});
  for (auto& v : sem_rows.values()) v = dist(rng);
  for (auto& v : pi_rows.values()) v = dist(rng);
  sem.vectors = sem_rows;
  pi.vectors = pi_rows;
  for (std::size_t r = 0; r < batch; ++r) batch_ids.push_back(r % 2 ? "b" : "a");

  auto forward = [&]() {
    zsar::Tape tape;
    auto losses = zsar::forward_train(tape, params, x, batch_ids, sem, &pi);
    return tape.value(losses.total).values()[0];
  };
  {
    zsar::Tape tape;
    auto losses = zsar::forward_train(tape, params, x, batch_ids, sem, &pi);
    tape.backward(losses.total);
  }

  double worst = 0.0;
  std::string worst_name;
  for (zsar::Parameter* p : params.trainable()) {
    std::vector<zsar::Parameter*> one = {p};
    auto rep = zsar::gradient_check(forward, std::span<zsar::Parameter* const>(one), eps,
                                    samples, zsar::mix_seed(seed, 23));
    std::cout << p->name << ": max rel error " << rep.max_rel_error << " over "
              << rep.components_checked << " components\n";
    if (rep.max_rel_error > worst) {
      worst = rep.max_rel_error;
      worst_name = p->name;
    }
  }
  std::cout << "worst: " << worst_name << " at " << worst << " (tolerance " << tolerance << ")\n";
  if (worst > tolerance) {
    std::cerr << "gradient check FAILED\n";
    return kNumericError;
  }
  std::cout << "gradient check passed\n";
  return kOk;
}

int cmd_synth(const zsar::SynthConfig& g, const std::string& out) {
  auto files = zsar::synth_generate(g, out);
  std::cout << "wrote synthetic corpus (" << g.n_classes << " classes, " << g.per_class
            << " clips/class, token pool " << files.name_token_pool << ") under " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot action recognition over precomputed backbone features"};
  app.require_subcommand(1);

  // splits
  auto* sc_splits = app.add_subcommand("splits", "generate seeded seen/unseen class splits");
  std::string sp_classes, sp_out = "splits.json";
  std::size_t sp_seen = 0, sp_n = 30;
  std::uint64_t sp_seed = 1;
  sc_splits->add_option("--classes", sp_classes, "class list csv")->required();
  sc_splits->add_option("--seen-count", sp_seen, "seen classes per split")->required();
  sc_splits->add_option("--n-splits", sp_n, "number of splits");
  sc_splits->add_option("--seed", sp_seed, "master seed");
  sc_splits->add_option("--out", sp_out, "output file");

  // train
  auto* sc_train = app.add_subcommand("train", "train one split and write a checkpoint");
  RunFlags tf;
  std::string tr_splits;
  std::size_t tr_index = 0;
  add_run_flags(sc_train, tf);
  sc_train->add_option("--splits", tr_splits, "splits file from `zsar splits`")->required();
  sc_train->add_option("--split-index", tr_index, "which split to train");

  // evaluate
  auto* sc_eval = app.add_subcommand("evaluate", "zero-shot top-1/top-5 of a checkpoint");
  RunFlags ef;
  std::string ev_ckpt, ev_splits;
  std::size_t ev_index = 0;
  add_run_flags(sc_eval, ef);
  sc_eval->add_option("--checkpoint", ev_ckpt, "checkpoint manifest")->required();
  sc_eval->add_option("--splits", ev_splits, "splits file")->required();
  sc_eval->add_option("--split-index", ev_index, "which split to evaluate");

  // benchmark
  auto* sc_bench = app.add_subcommand("benchmark", "train and evaluate all splits, aggregate");
  RunFlags bf;
  add_run_flags(sc_bench, bf);

  // aggregate-objects
  auto* sc_agg = app.add_subcommand("aggregate-objects",
                                    "top-k/top-m object aggregation from detections");
  std::string ag_dets, ag_classes, ag_out;
  std::size_t ag_k = 20, ag_m = 5;
  sc_agg->add_option("--detections", ag_dets, "detections jsonl")->required();
  sc_agg->add_option("--classes", ag_classes, "class list csv")->required();
  sc_agg->add_option("--top-k", ag_k, "objects kept per clip");
  sc_agg->add_option("--top-m", ag_m, "objects kept per class");
  sc_agg->add_option("--out", ag_out, "output json (stdout when omitted)");

  // embed-classes
  auto* sc_emb = app.add_subcommand("embed-classes", "class-name semantic vectors as csv");
  std::string ec_emb, ec_classes, ec_out;
  sc_emb->add_option("--embeddings", ec_emb, "word2vec text embedding table")->required();
  sc_emb->add_option("--classes", ec_classes, "class list csv")->required();
  sc_emb->add_option("--out", ec_out, "output csv (stdout when omitted)");

  // gradcheck
  auto* sc_grad = app.add_subcommand("gradcheck",
                                     "finite-difference check of the full model gradients");
  std::size_t gc_db = 16, gc_dim = 300, gc_tokens = 10, gc_kd = 0, gc_batch = 4, gc_samples = 100;
  std::vector<std::size_t> gc_hidden = {64, 64, 64};
  std::string gc_mode = "full", gc_fusion = "cross_attention";
  double gc_eps = 1e-5, gc_tol = 1e-4;
  std::uint64_t gc_seed = 1;
  sc_grad->add_option("--backbone-dim", gc_db, "backbone feature width");
  sc_grad->add_option("--semantic-dim", gc_dim, "semantic space width");
  sc_grad->add_option("--tokens", gc_tokens, "attention token count");
  sc_grad->add_option("--key-dim", gc_kd, "attention key width");
  sc_grad->add_option("--hidden", gc_hidden, "hallucinator hidden widths")->expected(3);
  sc_grad->add_option("--mode", gc_mode, "model mode");
  sc_grad->add_option("--fusion", gc_fusion, "fusion mode");
  sc_grad->add_option("--batch", gc_batch, "synthetic batch size");
  sc_grad->add_option("--eps", gc_eps, "central-difference step");
  sc_grad->add_option("--tolerance", gc_tol, "max relative error allowed");
  sc_grad->add_option("--samples", gc_samples, "components sampled per parameter");
  sc_grad->add_option("--seed", gc_seed, "seed");

  // synth
  auto* sc_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  zsar::SynthConfig sg;
  std::string sy_out = "synth";
  sc_synth->add_option("--classes", sg.n_classes, "number of classes");
  sc_synth->add_option("--per-class", sg.per_class, "clips per class");
  sc_synth->add_option("--backbone-dim", sg.backbone_dim, "backbone feature width");
  sc_synth->add_option("--noise", sg.noise_sigma, "feature noise sigma");
  sc_synth->add_option("--object-vocab", sg.object_vocab_size, "object vocabulary size");
  sc_synth->add_option("--objects-per-class", sg.objects_per_class, "planted objects per class");
  sc_synth->add_option("--semantic-dim", sg.semantic_dim, "embedding width");
  sc_synth->add_option("--seed", sg.seed, "seed");
  sc_synth->add_option("--out", sy_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (sc_splits->parsed()) return cmd_splits(sp_classes, sp_seen, sp_n, sp_seed, sp_out);
    if (sc_train->parsed()) return cmd_train(sc_train, tf, tr_splits, tr_index);
    if (sc_eval->parsed()) return cmd_evaluate(sc_eval, ef, ev_ckpt, ev_splits, ev_index);
    if (sc_bench->parsed()) return cmd_benchmark(sc_bench, bf);
    if (sc_agg->parsed()) return cmd_aggregate(ag_dets, ag_classes, ag_k, ag_m, ag_out);
    if (sc_emb->parsed()) return cmd_embed_classes(ec_emb, ec_classes, ec_out);
    if (sc_grad->parsed()) {
      return cmd_gradcheck(gc_db, gc_dim, gc_tokens, gc_kd, gc_hidden, gc_mode, gc_fusion,
                           gc_batch, gc_eps, gc_tol, gc_samples, gc_seed);
    }
    if (sc_synth->parsed()) return cmd_synth(sg, sy_out);
  } catch (const zsar::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const zsar::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const zsar::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
