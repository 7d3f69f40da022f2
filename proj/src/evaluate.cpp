#include "zsar/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "zsar/checkpoint.hpp"
#include "zsar/errors.hpp"
#include "zsar/train.hpp"

namespace zsar {

namespace {

using nlohmann::json;

std::string fmt_fraction(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ClassSemantics restrict_semantics(const ClassSemantics& all,
                                  const std::vector<std::string>& keep_ids) {
  std::unordered_set<std::string> keep(keep_ids.begin(), keep_ids.end());
  ClassSemantics out;
  const std::size_t dim = all.dim();
  std::vector<double> flat;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!keep.count(all.class_ids[i])) continue;
    out.class_ids.push_back(all.class_ids[i]);
    const double* row = all.vectors.data() + i * dim;
    flat.insert(flat.end(), row, row + dim);
  }
  if (out.class_ids.empty()) {
    throw DataError("restriction keeps no classes");
  }
  out.vectors = Tensor({out.class_ids.size(), dim}, std::move(flat));
  return out;
}

SplitScore evaluate(ModelParams& params, const Dataset& data, const Split& split,
                    const ClassSemantics& all_semantics) {
  const ClassSemantics unseen_sem = restrict_semantics(all_semantics, split.unseen);
  const std::unordered_set<std::string> unseen(split.unseen.begin(), split.unseen.end());
  const std::size_t top_n = std::min<std::size_t>(5, unseen_sem.size());

  std::size_t total = 0, hit1 = 0, hit5 = 0;
  for (const auto& f : data.features) {
    if (!unseen.count(f.class_id)) continue;
    const std::vector<double> query = forward_test(params, f.values);
    const auto ranked = predict(query, unseen_sem, top_n);
    ++total;
    if (ranked[0] == f.class_id) ++hit1;
    if (std::find(ranked.begin(), ranked.end(), f.class_id) != ranked.end()) ++hit5;
  }
  if (total == 0) throw DataError("no unseen-class samples to evaluate");
  return {static_cast<double>(hit1) / static_cast<double>(total),
          static_cast<double>(hit5) / static_cast<double>(total)};
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std: empty sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

BenchmarkReport run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  const WordEmbeddingTable table = load_embedding_table(cfg.embeddings_path);
  const Dataset data = load_dataset(cfg.classes_path, cfg.features_path, cfg.detections_path);

  BenchmarkReport report;
  report.config = cfg;
  report.fingerprint = config_fingerprint(cfg);

  const ClassSemantics all_semantics = embed_class_set(table, data.class_pairs());
  report.splits = generate_splits(data.class_ids(), cfg.seen_count, cfg.n_splits, cfg.seed);

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  std::vector<double> top1s, top5s;
  for (std::size_t i = 0; i < report.splits.size(); ++i) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      TrainResult result = train(cfg, data, report.splits[i], table, i);
      const auto t1 = std::chrono::steady_clock::now();
      const SplitScore score = evaluate(result.params, data, report.splits[i], all_semantics);
      const auto t2 = std::chrono::steady_clock::now();
      report.train_seconds += std::chrono::duration<double>(t1 - t0).count();
      report.eval_seconds += std::chrono::duration<double>(t2 - t1).count();
      report.scores.push_back(score);
      top1s.push_back(score.top1);
      top5s.push_back(score.top5);
      if (!cfg.out_dir.empty()) {
        save_checkpoint(result.params, cfg.epochs,
                        cfg.out_dir + "/checkpoint_split" + std::to_string(i) + ".json");
      }
    } catch (const Error& e) {
      throw Error("split " + std::to_string(i) + ": " + e.what());
    }
  }

  std::tie(report.top1_mean, report.top1_std) = mean_std(top1s);
  std::tie(report.top5_mean, report.top5_std) = mean_std(top5s);
  report.single_split = report.scores.size() == 1;
  return report;
}

void write_report_json(const BenchmarkReport& report, const std::string& path) {
  json j;
  j["format"] = "zsar-report";
  j["version"] = 1;
  j["config_fingerprint"] = report.fingerprint;
  j["config"] = json::parse(config_json(report.config));
  j["config"]["embeddings_path"] = report.config.embeddings_path;
  j["config"]["classes_path"] = report.config.classes_path;
  j["config"]["features_path"] = report.config.features_path;
  j["config"]["detections_path"] = report.config.detections_path;

  json splits = json::array();
  for (std::size_t i = 0; i < report.splits.size(); ++i) {
    json s;
    s["index"] = i;
    s["seed"] = report.splits[i].seed;
    s["seen"] = report.splits[i].seen;
    s["unseen"] = report.splits[i].unseen;
    s["top1"] = report.scores[i].top1;
    s["top5"] = report.scores[i].top5;
    splits.push_back(std::move(s));
  }
  j["splits"] = std::move(splits);

  j["aggregate"] = {{"n_splits", report.scores.size()},
                    {"top1_mean", report.top1_mean},
                    {"top1_std", report.top1_std},
                    {"top5_mean", report.top5_mean},
                    {"top5_std", report.top5_std}};
  if (report.single_split) j["aggregate"]["single_split_warning"] = true;
  j["timing"] = {{"train_seconds", report.train_seconds},
                 {"eval_seconds", report.eval_seconds}};

  std::ofstream out(path);
  if (!out) throw DataError("cannot write report '" + path + "'");
  out << j.dump(2) << "\n";
}

void write_report_csv(const BenchmarkReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report table '" + path + "'");
  out << "split,top1,top5\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    out << i << "," << fmt_fraction(report.scores[i].top1) << ","
        << fmt_fraction(report.scores[i].top5) << "\n";
  }
}

std::string format_report(const BenchmarkReport& report) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "split  top1    top5\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    os << i << "      " << report.scores[i].top1 << "  " << report.scores[i].top5 << "\n";
  }
  os << "mean top1 " << report.top1_mean << " +/- " << report.top1_std << ", top5 "
     << report.top5_mean << " +/- " << report.top5_std;
  if (report.single_split) os << "  (single split: std is 0 by convention)";
  os << "\n";
  return os.str();
}

}  // namespace zsar
