#include "zsar/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << path << ": line " << line_no << ": " << what;
  throw DataError(os.str());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
    fields.back().pop_back();
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<std::string> Dataset::class_ids() const {
  std::vector<std::string> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.id);
  return out;
}

std::vector<std::pair<std::string, std::string>> Dataset::class_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.emplace_back(c.id, c.name);
  return out;
}

std::vector<ClassInfo> load_classes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open class list '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty class list");
  {
    auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "class_id" || header[1] != "name") {
      fail(path, 1, "expected header \"class_id,name\"");
    }
  }
  std::vector<ClassInfo> out;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (fields.size() < 2 || fields[0].empty()) {
      fail(path, line_no, "expected \"class_id,name\"");
    }
    std::string name = line.substr(fields[0].size() + 1);
    if (!name.empty() && name.back() == '\r') name.pop_back();
    if (name.empty()) fail(path, line_no, "empty class name");
    if (!ids.insert(fields[0]).second) {
      fail(path, line_no, "duplicate class id '" + fields[0] + "'");
    }
    out.push_back({fields[0], name});
  }
  if (out.empty()) throw DataError(path + ": class list has no rows");
  return out;
}

std::vector<BackboneFeature> load_features(const std::string& path,
                                           const std::vector<ClassInfo>& classes,
                                           std::size_t* backbone_dim_out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file '" + path + "'");
  std::unordered_set<std::string> known;
  for (const auto& c : classes) known.insert(c.id);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty dataset: no header row");
  auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "video_id" || header[1] != "class_id") {
    fail(path, 1, "expected header \"video_id,class_id,f0,...\"");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i + 2] != "f" + std::to_string(i)) {
      fail(path, 1, "feature column " + std::to_string(i + 2) + " must be named f" +
                        std::to_string(i));
    }
  }

  std::vector<BackboneFeature> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (fields.size() != dim + 2) {
      std::ostringstream os;
      os << "ragged row: expected " << dim + 2 << " fields, found " << fields.size();
      fail(path, line_no, os.str());
    }
    BackboneFeature f;
    f.video_id = fields[0];
    f.class_id = fields[1];
    if (!known.count(f.class_id)) {
      fail(path, line_no, "unknown class id '" + f.class_id + "'");
    }
    f.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 2], f.values[i])) {
        fail(path, line_no, "field f" + std::to_string(i) + " is not a number");
      }
    }
    out.push_back(std::move(f));
  }
  if (out.empty()) throw DataError(path + ": empty dataset: no feature rows");
  if (backbone_dim_out) *backbone_dim_out = dim;
  return out;
}

std::vector<DetectionRecord> load_detections(const std::string& path,
                                             const std::vector<ClassInfo>& classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections file '" + path + "'");
  std::unordered_set<std::string> known;
  for (const auto& c : classes) known.insert(c.id);

  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(path, line_no, "not a JSON object");
    DetectionRecord rec;
    try {
      rec.video_id = j.at("video_id").get<std::string>();
      rec.class_id = j.at("class_id").get<std::string>();
      for (const auto& lab : j.at("labels")) {
        rec.labels.emplace_back(lab.at("name").get<std::string>(),
                                lab.at("prob").get<double>());
      }
    } catch (const json::exception& e) {
      fail(path, line_no, std::string("bad detection record: ") + e.what());
    }
    if (!known.count(rec.class_id)) {
      fail(path, line_no, "unknown class id '" + rec.class_id + "'");
    }
    if (rec.labels.empty()) fail(path, line_no, "labels array is empty");
    for (const auto& [name, prob] : rec.labels) {
      if (name.empty()) fail(path, line_no, "empty object name");
      if (!(prob >= 0.0 && prob <= 1.0)) {
        fail(path, line_no, "probability " + std::to_string(prob) + " outside [0,1]");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Dataset load_dataset(const std::string& classes_path, const std::string& features_path,
                     const std::string& detections_path) {
  Dataset d;
  d.classes = load_classes(classes_path);
  d.features = load_features(features_path, d.classes, &d.backbone_dim);
  if (!detections_path.empty()) {
    d.detections = load_detections(detections_path, d.classes);
  }
  return d;
}

}  // namespace zsar
