#include "zsar/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool parse_double(std::string_view sv, double& out) {
  const char* first = sv.data();
  const char* last = sv.data() + sv.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool has_alnum(const std::string& s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isalnum(c) != 0; });
}

}  // namespace

std::vector<double> ClassSemantics::row(std::size_t i) const {
  const double* p = vectors.data() + i * dim();
  return std::vector<double>(p, p + dim());
}

std::size_t ClassSemantics::index_of(const std::string& class_id) const {
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    if (class_ids[i] == class_id) return i;
  }
  throw DataError("no class semantics for class '" + class_id + "'");
}

std::vector<double> ObjectSemantics::row(std::size_t i) const {
  const double* p = vectors.data() + i * dim();
  return std::vector<double>(p, p + dim());
}

std::size_t ObjectSemantics::index_of(const std::string& class_id) const {
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    if (class_ids[i] == class_id) return i;
  }
  throw DataError("no object semantics for class '" + class_id + "'");
}

WordEmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding table '" + path + "'");

  auto fail = [&](std::size_t line_no, const std::string& what) -> DataError {
    std::ostringstream os;
    os << path << ": line " << line_no << ": " << what;
    return DataError(os.str());
  };

  std::string line;
  if (!std::getline(in, line)) throw fail(1, "malformed header: empty file");
  auto header = split_ws(line);
  std::size_t vocab_size = 0, dim = 0;
  auto parse_size = [](std::string_view sv, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out);
    return ec == std::errc() && ptr == sv.data() + sv.size();
  };
  if (header.size() != 2 || !parse_size(header[0], vocab_size) || !parse_size(header[1], dim) ||
      dim == 0) {
    throw fail(1, "malformed header: expected \"<vocab_size> <dim>\"");
  }

  WordEmbeddingTable table;
  table.dim = dim;
  table.entries.reserve(vocab_size);
  std::size_t line_no = 1;
  while (table.entries.size() < vocab_size) {
    if (!std::getline(in, line)) {
      throw fail(line_no + 1, "unexpected end of file: read " +
                                  std::to_string(table.entries.size()) + " of " +
                                  std::to_string(vocab_size) + " entries");
    }
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) throw fail(line_no, "empty line inside the table body");
    if (fields.size() != dim + 1) {
      std::ostringstream os;
      os << "expected " << dim << " components, found " << fields.size() - 1;
      throw fail(line_no, os.str());
    }
    std::string token = lowercase(std::string(fields[0]));
    if (token.empty()) throw fail(line_no, "empty token");
    std::vector<double> vec(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i])) {
        throw fail(line_no, "component " + std::to_string(i + 1) + " is not a number");
      }
    }
    if (!table.entries.emplace(std::move(token), std::move(vec)).second) {
      throw fail(line_no, "duplicate token '" + lowercase(std::string(fields[0])) + "'");
    }
  }
  // Only trailing blank lines may follow the declared entry count.
  while (std::getline(in, line)) {
    ++line_no;
    if (!split_ws(line).empty()) {
      throw fail(line_no, "unexpected data after " + std::to_string(vocab_size) + " entries");
    }
  }
  return table;
}

std::vector<std::string> tokenize_label(const std::string& raw) {
  if (raw.empty()) throw DataError("empty label");
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty() && has_alnum(current)) tokens.push_back(lowercase(current));
    current.clear();
  };
  char prev = '\0';
  for (char c : raw) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '_' || c == '-') {
      flush();
    } else {
      if (std::isupper(uc) && std::islower(static_cast<unsigned char>(prev))) flush();
      current.push_back(c);
    }
    prev = c;
  }
  flush();
  if (tokens.empty()) {
    throw DataError("label '" + raw + "' contains no alphanumeric characters");
  }
  return tokens;
}

std::vector<double> embed_phrase(const WordEmbeddingTable& table,
                                 const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("embed_phrase: token list is empty");
  std::vector<double> sum(table.dim, 0.0);
  std::size_t found = 0;
  for (const auto& tok : tokens) {
    auto it = table.entries.find(tok);
    if (it == table.entries.end()) continue;
    for (std::size_t i = 0; i < table.dim; ++i) sum[i] += it->second[i];
    ++found;
  }
  if (found == 0) {
    std::ostringstream os;
    os << "unresolvable phrase: none of the tokens [";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) os << ", ";
      os << "'" << tokens[i] << "'";
    }
    os << "] are in the vocabulary";
    throw DataError(os.str());
  }
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

ClassSemantics embed_class_set(const WordEmbeddingTable& table,
                               const std::vector<std::pair<std::string, std::string>>& classes) {
  ClassSemantics out;
  std::unordered_set<std::string> seen_ids;
  std::vector<double> flat;
  flat.reserve(classes.size() * table.dim);
  for (const auto& [id, name] : classes) {
    if (!seen_ids.insert(id).second) throw DataError("duplicate class id '" + id + "'");
    out.class_ids.push_back(id);
    std::vector<double> vec;
    try {
      vec = embed_phrase(table, tokenize_label(name));
    } catch (const DataError& e) {
      throw DataError("class '" + id + "': " + e.what());
    }
    flat.insert(flat.end(), vec.begin(), vec.end());
  }
  if (classes.empty()) throw std::invalid_argument("embed_class_set: empty class list");
  out.vectors = Tensor({classes.size(), table.dim}, std::move(flat));
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> aggregate_objects(
    const std::vector<DetectionRecord>& detections, const std::vector<std::string>& class_ids,
    const ObjectAggregationConfig& cfg) {
  if (cfg.top_k_per_clip == 0 || cfg.top_m_per_class == 0) {
    throw std::invalid_argument("aggregate_objects: top_k and top_m must be positive");
  }
  std::unordered_set<std::string> known(class_ids.begin(), class_ids.end());
  // name -> number of kept clip lists it appears in, per class
  std::unordered_map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& rec : detections) {
    if (!known.count(rec.class_id)) {
      throw DataError("detection for video '" + rec.video_id + "' names unknown class '" +
                      rec.class_id + "'");
    }
    if (rec.labels.empty()) {
      throw DataError("detection for video '" + rec.video_id + "' has no labels");
    }
    // Top-k labels of this clip; probability ties broken by name.
    std::vector<std::pair<std::string, double>> labels = rec.labels;
    std::sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (labels.size() > cfg.top_k_per_clip) labels.resize(cfg.top_k_per_clip);
    std::set<std::string> kept;
    for (const auto& [name, prob] : labels) kept.insert(name);
    auto& cls = counts[rec.class_id];
    for (const auto& name : kept) cls[name] += 1;
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  out.reserve(class_ids.size());
  for (const auto& id : class_ids) {
    auto it = counts.find(id);
    if (it == counts.end()) {
      throw DataError("missing privileged information: class '" + id +
                      "' has no detection records");
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(it->second.begin(), it->second.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    const std::size_t m = std::min<std::size_t>(cfg.top_m_per_class, ranked.size());
    std::vector<std::string> names;
    names.reserve(m);
    for (std::size_t i = 0; i < m; ++i) names.push_back(ranked[i].first);
    out.emplace_back(id, std::move(names));
  }
  return out;
}

ObjectSemantics embed_objects(
    const WordEmbeddingTable& table,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& object_lists) {
  if (object_lists.empty()) throw std::invalid_argument("embed_objects: empty object lists");
  ObjectSemantics out;
  std::vector<double> flat;
  flat.reserve(object_lists.size() * table.dim);
  for (const auto& [id, names] : object_lists) {
    if (names.empty()) {
      throw std::invalid_argument("embed_objects: class '" + id + "' has an empty object list");
    }
    std::vector<double> sum(table.dim, 0.0);
    std::size_t resolved = 0;
    for (const auto& name : names) {
      std::vector<double> vec;
      try {
        vec = embed_phrase(table, tokenize_label(name));
      } catch (const DataError&) {
        continue;  // skip unresolvable names; error below only if all fail
      }
      for (std::size_t i = 0; i < table.dim; ++i) sum[i] += vec[i];
      ++resolved;
    }
    if (resolved == 0) {
      throw DataError("class '" + id + "': no object name resolves in the vocabulary");
    }
    for (auto& x : sum) x /= static_cast<double>(resolved);
    out.class_ids.push_back(id);
    out.object_lists.push_back(names);
    flat.insert(flat.end(), sum.begin(), sum.end());
  }
  out.vectors = Tensor({object_lists.size(), table.dim}, std::move(flat));
  return out;
}

}  // namespace zsar
