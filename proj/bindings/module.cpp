#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zsar/checkpoint.hpp"
#include "zsar/config.hpp"
#include "zsar/dataset.hpp"
#include "zsar/errors.hpp"
#include "zsar/evaluate.hpp"
#include "zsar/optim.hpp"
#include "zsar/splits.hpp"
#include "zsar/synth.hpp"
#include "zsar/train.hpp"

namespace py = pybind11;

namespace {

std::vector<std::vector<double>> tensor_rows(const zsar::Tensor& t) {
  std::vector<std::vector<double>> rows;
  rows.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    rows.emplace_back(t.data() + r * t.cols(), t.data() + (r + 1) * t.cols());
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Zero-shot action recognition on precomputed backbone features";

  py::register_exception<zsar::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<zsar::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<zsar::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // embeddings
  py::class_<zsar::WordEmbeddingTable>(m, "WordEmbeddingTable")
      .def_readonly("dim", &zsar::WordEmbeddingTable::dim)
      .def("__len__", &zsar::WordEmbeddingTable::size)
      .def("__contains__", &zsar::WordEmbeddingTable::contains)
      .def("vector",
           [](const zsar::WordEmbeddingTable& t, const std::string& token) {
             auto it = t.entries.find(token);
             if (it == t.entries.end()) throw py::key_error(token);
             return it->second;
           })
      .def("tokens", [](const zsar::WordEmbeddingTable& t) {
        std::vector<std::string> out;
        out.reserve(t.entries.size());
        for (const auto& [tok, vec] : t.entries) out.push_back(tok);
        return out;
      });

  py::class_<zsar::ClassSemantics>(m, "ClassSemantics")
      .def_readonly("class_ids", &zsar::ClassSemantics::class_ids)
      .def_property_readonly("dim", &zsar::ClassSemantics::dim)
      .def("row", &zsar::ClassSemantics::row)
      .def("rows", [](const zsar::ClassSemantics& s) { return tensor_rows(s.vectors); });

  py::class_<zsar::ObjectSemantics>(m, "ObjectSemantics")
      .def_readonly("class_ids", &zsar::ObjectSemantics::class_ids)
      .def_readonly("object_lists", &zsar::ObjectSemantics::object_lists)
      .def_property_readonly("dim", &zsar::ObjectSemantics::dim)
      .def("row", &zsar::ObjectSemantics::row)
      .def("rows", [](const zsar::ObjectSemantics& s) { return tensor_rows(s.vectors); });

  py::class_<zsar::DetectionRecord>(m, "DetectionRecord")
      .def(py::init([](std::string video_id, std::string class_id,
                       std::vector<std::pair<std::string, double>> labels) {
             return zsar::DetectionRecord{std::move(video_id), std::move(class_id),
                                          std::move(labels)};
           }),
           py::arg("video_id"), py::arg("class_id"), py::arg("labels"))
      .def_readonly("video_id", &zsar::DetectionRecord::video_id)
      .def_readonly("class_id", &zsar::DetectionRecord::class_id)
      .def_readonly("labels", &zsar::DetectionRecord::labels);

  m.def("load_embedding_table", &zsar::load_embedding_table, py::arg("path"));
  m.def("tokenize_label", &zsar::tokenize_label, py::arg("raw"));
  m.def("embed_phrase", &zsar::embed_phrase, py::arg("table"), py::arg("tokens"));
  m.def("embed_class_set", &zsar::embed_class_set, py::arg("table"), py::arg("classes"));
  m.def(
      "aggregate_objects",
      [](const std::vector<zsar::DetectionRecord>& detections,
         const std::vector<std::string>& class_ids, std::size_t top_k, std::size_t top_m) {
        zsar::ObjectAggregationConfig cfg;
        cfg.top_k_per_clip = top_k;
        cfg.top_m_per_class = top_m;
        return zsar::aggregate_objects(detections, class_ids, cfg);
      },
      py::arg("detections"), py::arg("class_ids"), py::arg("top_k") = 20, py::arg("top_m") = 5);
  m.def("embed_objects", &zsar::embed_objects, py::arg("table"), py::arg("object_lists"));

  // model
  py::enum_<zsar::ModelMode>(m, "ModelMode")
      .value("baseline", zsar::ModelMode::baseline)
      .value("pi_train_only", zsar::ModelMode::pi_train_only)
      .value("full", zsar::ModelMode::full);
  py::enum_<zsar::FusionMode>(m, "FusionMode")
      .value("multiply", zsar::FusionMode::multiply)
      .value("concat", zsar::FusionMode::concat)
      .value("add", zsar::FusionMode::add)
      .value("cross_attention", zsar::FusionMode::cross_attention);

  py::class_<zsar::ModelParams>(m, "ModelParams")
      .def_property_readonly("mode",
                             [](const zsar::ModelParams& p) { return p.config.mode; })
      .def_property_readonly("fusion",
                             [](const zsar::ModelParams& p) { return p.config.fusion; })
      .def_property_readonly("backbone_dim",
                             [](const zsar::ModelParams& p) { return p.config.backbone_dim; })
      .def_property_readonly("semantic_dim",
                             [](const zsar::ModelParams& p) { return p.config.semantic_dim; })
      .def("parameter_names", [](const zsar::ModelParams& p) {
        std::vector<std::string> names;
        for (const auto* param : p.trainable()) names.push_back(param->name);
        return names;
      });

  m.def("forward_test", &zsar::forward_test, py::arg("params"), py::arg("feature"));
  m.def("cosine_distance", &zsar::cosine_distance, py::arg("a"), py::arg("b"));
  m.def("predict", &zsar::predict, py::arg("query"), py::arg("semantics"), py::arg("top_n"));
  m.def("lr_schedule", &zsar::lr_schedule, py::arg("base_lr"), py::arg("epoch"));

  // dataset and splits
  py::class_<zsar::ClassInfo>(m, "ClassInfo")
      .def_readonly("id", &zsar::ClassInfo::id)
      .def_readonly("name", &zsar::ClassInfo::name);
  py::class_<zsar::BackboneFeature>(m, "BackboneFeature")
      .def_readonly("video_id", &zsar::BackboneFeature::video_id)
      .def_readonly("class_id", &zsar::BackboneFeature::class_id)
      .def_readonly("values", &zsar::BackboneFeature::values);
  py::class_<zsar::Dataset>(m, "Dataset")
      .def_readonly("classes", &zsar::Dataset::classes)
      .def_readonly("features", &zsar::Dataset::features)
      .def_readonly("detections", &zsar::Dataset::detections)
      .def_readonly("backbone_dim", &zsar::Dataset::backbone_dim)
      .def("class_ids", &zsar::Dataset::class_ids);

  m.def("load_dataset", &zsar::load_dataset, py::arg("classes_path"), py::arg("features_path"),
        py::arg("detections_path") = "");

  py::class_<zsar::Split>(m, "Split")
      .def(py::init([](std::vector<std::string> seen, std::vector<std::string> unseen,
                       std::uint64_t seed) {
             return zsar::Split{seed, std::move(seen), std::move(unseen)};
           }),
           py::arg("seen"), py::arg("unseen"), py::arg("seed") = 0)
      .def_readonly("seed", &zsar::Split::seed)
      .def_readonly("seen", &zsar::Split::seen)
      .def_readonly("unseen", &zsar::Split::unseen);

  m.def("generate_splits", &zsar::generate_splits, py::arg("class_ids"), py::arg("seen_count"),
        py::arg("n_splits"), py::arg("seed"));
  m.def("save_splits", &zsar::save_splits, py::arg("splits"), py::arg("seen_count"),
        py::arg("seed"), py::arg("path"));
  m.def("load_splits", &zsar::load_splits, py::arg("path"));

  // config
  py::class_<zsar::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("embeddings_path", &zsar::RunConfig::embeddings_path)
      .def_readwrite("classes_path", &zsar::RunConfig::classes_path)
      .def_readwrite("features_path", &zsar::RunConfig::features_path)
      .def_readwrite("detections_path", &zsar::RunConfig::detections_path)
      .def_readwrite("out_dir", &zsar::RunConfig::out_dir)
      .def_readwrite("seen_count", &zsar::RunConfig::seen_count)
      .def_readwrite("n_splits", &zsar::RunConfig::n_splits)
      .def_readwrite("epochs", &zsar::RunConfig::epochs)
      .def_readwrite("batch_size", &zsar::RunConfig::batch_size)
      .def_readwrite("base_lr", &zsar::RunConfig::base_lr)
      .def_readwrite("mode", &zsar::RunConfig::mode)
      .def_readwrite("fusion", &zsar::RunConfig::fusion)
      .def_readwrite("attention_tokens", &zsar::RunConfig::attention_tokens)
      .def_readwrite("attention_key_dim", &zsar::RunConfig::attention_key_dim)
      .def_readwrite("hallucinator_hidden", &zsar::RunConfig::hallucinator_hidden)
      .def_readwrite("frames_per_clip", &zsar::RunConfig::frames_per_clip)
      .def_readwrite("top_k_per_clip", &zsar::RunConfig::top_k_per_clip)
      .def_readwrite("top_m_per_class", &zsar::RunConfig::top_m_per_class)
      .def_readwrite("seed", &zsar::RunConfig::seed)
      .def("validate", &zsar::RunConfig::validate)
      .def("fingerprint", &zsar::config_fingerprint);

  m.def("load_run_config", &zsar::load_run_config, py::arg("path"));

  // training and evaluation
  py::class_<zsar::EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &zsar::EpochStats::epoch)
      .def_readonly("lr", &zsar::EpochStats::lr)
      .def_readonly("loss_total", &zsar::EpochStats::loss_total)
      .def_readonly("loss_action", &zsar::EpochStats::loss_action)
      .def_readonly("loss_hallucinate", &zsar::EpochStats::loss_hallucinate);

  py::class_<zsar::TrainResult>(m, "TrainResult")
      .def_readonly("params", &zsar::TrainResult::params)
      .def_readonly("trace", &zsar::TrainResult::trace);

  m.def("train", &zsar::train, py::arg("config"), py::arg("data"), py::arg("split"),
        py::arg("table"), py::arg("split_index") = 0);

  py::class_<zsar::SplitScore>(m, "SplitScore")
      .def_readonly("top1", &zsar::SplitScore::top1)
      .def_readonly("top5", &zsar::SplitScore::top5);

  m.def("evaluate", &zsar::evaluate, py::arg("params"), py::arg("data"), py::arg("split"),
        py::arg("semantics"));

  py::class_<zsar::BenchmarkReport>(m, "BenchmarkReport")
      .def_readonly("fingerprint", &zsar::BenchmarkReport::fingerprint)
      .def_readonly("scores", &zsar::BenchmarkReport::scores)
      .def_readonly("splits", &zsar::BenchmarkReport::splits)
      .def_readonly("top1_mean", &zsar::BenchmarkReport::top1_mean)
      .def_readonly("top1_std", &zsar::BenchmarkReport::top1_std)
      .def_readonly("top5_mean", &zsar::BenchmarkReport::top5_mean)
      .def_readonly("top5_std", &zsar::BenchmarkReport::top5_std)
      .def_readonly("single_split", &zsar::BenchmarkReport::single_split);

  m.def("run_benchmark", &zsar::run_benchmark, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_report_json", &zsar::write_report_json, py::arg("report"), py::arg("path"));
  m.def("write_report_csv", &zsar::write_report_csv, py::arg("report"), py::arg("path"));
  m.def("format_report", &zsar::format_report, py::arg("report"));

  // checkpoints
  m.def("save_checkpoint", &zsar::save_checkpoint, py::arg("params"), py::arg("epoch"),
        py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        auto loaded = zsar::load_checkpoint(path);
        return py::make_tuple(std::move(loaded.params), loaded.epoch);
      },
      py::arg("path"));

  // synthetic corpus
  py::class_<zsar::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_classes", &zsar::SynthConfig::n_classes)
      .def_readwrite("per_class", &zsar::SynthConfig::per_class)
      .def_readwrite("backbone_dim", &zsar::SynthConfig::backbone_dim)
      .def_readwrite("noise_sigma", &zsar::SynthConfig::noise_sigma)
      .def_readwrite("object_vocab_size", &zsar::SynthConfig::object_vocab_size)
      .def_readwrite("objects_per_class", &zsar::SynthConfig::objects_per_class)
      .def_readwrite("seed", &zsar::SynthConfig::seed)
      .def_readwrite("semantic_dim", &zsar::SynthConfig::semantic_dim);

  py::class_<zsar::SynthPaths>(m, "SynthPaths")
      .def_readonly("embeddings", &zsar::SynthPaths::embeddings)
      .def_readonly("classes", &zsar::SynthPaths::classes)
      .def_readonly("features", &zsar::SynthPaths::features)
      .def_readonly("detections", &zsar::SynthPaths::detections);

  py::class_<zsar::SynthData>(m, "SynthData")
      .def_readonly("paths", &zsar::SynthData::paths)
      .def_readonly("planted_objects", &zsar::SynthData::planted_objects)
      .def_readonly("name_token_pool", &zsar::SynthData::name_token_pool);

  m.def("synth_generate", &zsar::synth_generate, py::arg("config"), py::arg("out_dir"));
}
