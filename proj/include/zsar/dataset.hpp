#pragma once

#include <string>
#include <utility>
#include <vector>

#include "zsar/embeddings.hpp"

namespace zsar {

// One clip's precomputed frozen-backbone activations.
struct BackboneFeature {
  std::string video_id;
  std::string class_id;
  std::vector<double> values;
};

struct ClassInfo {
  std::string id;
  std::string name;
};

struct Dataset {
  std::vector<ClassInfo> classes;
  std::vector<BackboneFeature> features;
  std::vector<DetectionRecord> detections;  // may be empty (baseline runs)
  std::size_t backbone_dim = 0;

  std::vector<std::string> class_ids() const;
  std::vector<std::pair<std::string, std::string>> class_pairs() const;
};

// "class_id,name" with a header line; the name is everything after the
// first comma.
std::vector<ClassInfo> load_classes(const std::string& path);

// "video_id,class_id,f0,..,f{D-1}" with a header naming every column.
// Every row must match the header width and name a known class.
std::vector<BackboneFeature> load_features(const std::string& path,
                                           const std::vector<ClassInfo>& classes,
                                           std::size_t* backbone_dim_out);

// Line-delimited JSON: {"video_id":..,"class_id":..,"labels":[{"name":..,"prob":..},..]}
std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const std::vector<ClassInfo>& classes);

// Loads classes + features (+ detections when a path is given).
Dataset load_dataset(const std::string& classes_path, const std::string& features_path,
                     const std::string& detections_path = "");

}  // namespace zsar
