#pragma once

#include <string>
#include <vector>

#include "zsar/config.hpp"
#include "zsar/dataset.hpp"
#include "zsar/model.hpp"
#include "zsar/splits.hpp"

namespace zsar {

struct SplitScore {
  double top1 = 0.0;
  double top5 = 0.0;
};

// Restriction of class semantics to the given ids, preserving row order.
// Rows of other classes are never read.
ClassSemantics restrict_semantics(const ClassSemantics& all,
                                  const std::vector<std::string>& keep_ids);

// Zero-shot scoring of one split: every unseen-class sample is mapped by
// forward_test and ranked against unseen-class semantics only. top5 uses
// min(5, unseen count).
SplitScore evaluate(ModelParams& params, const Dataset& data, const Split& split,
                    const ClassSemantics& all_semantics);

struct BenchmarkReport {
  std::string fingerprint;
  RunConfig config;
  std::vector<Split> splits;
  std::vector<SplitScore> scores;
  double top1_mean = 0.0, top1_std = 0.0;
  double top5_mean = 0.0, top5_std = 0.0;
  bool single_split = false;  // std reported as 0 by convention
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

// mean and sample (n-1) standard deviation; n == 1 gives std 0.
std::pair<double, double> mean_std(const std::vector<double>& xs);

// Full protocol: load data, generate n_splits seeded splits, train and
// evaluate each, aggregate. Split failures are rethrown with their index.
// When cfg.out_dir is set, per-split checkpoints land there.
BenchmarkReport run_benchmark(const RunConfig& cfg);

void write_report_json(const BenchmarkReport& report, const std::string& path);
void write_report_csv(const BenchmarkReport& report, const std::string& path);

// The human-readable per-split table plus the aggregate line.
std::string format_report(const BenchmarkReport& report);

}  // namespace zsar
