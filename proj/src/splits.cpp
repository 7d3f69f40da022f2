#include "zsar/splits.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "zsar/errors.hpp"

namespace zsar {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<Split> generate_splits(const std::vector<std::string>& class_ids,
                                   std::size_t seen_count, std::size_t n_splits,
                                   std::uint64_t seed) {
  if (class_ids.empty()) throw std::invalid_argument("generate_splits: empty class list");
  if (seen_count == 0 || seen_count >= class_ids.size()) {
    throw ConfigError("seen_count " + std::to_string(seen_count) + " must be in (0, " +
                      std::to_string(class_ids.size()) + ")");
  }
  {
    std::unordered_set<std::string> ids(class_ids.begin(), class_ids.end());
    if (ids.size() != class_ids.size()) {
      throw std::invalid_argument("generate_splits: duplicate class ids");
    }
  }
  std::vector<Split> out;
  out.reserve(n_splits);
  for (std::size_t i = 0; i < n_splits; ++i) {
    Split s;
    s.seed = mix_seed(seed, i);
    std::vector<std::size_t> order(class_ids.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::mt19937_64 rng(s.seed);
    std::shuffle(order.begin(), order.end(), rng);
    // Membership comes from the shuffle; both lists keep input class order.
    std::vector<bool> is_seen(class_ids.size(), false);
    for (std::size_t j = 0; j < seen_count; ++j) is_seen[order[j]] = true;
    for (std::size_t j = 0; j < class_ids.size(); ++j) {
      (is_seen[j] ? s.seen : s.unseen).push_back(class_ids[j]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_splits(const std::vector<Split>& splits, std::size_t seen_count, std::uint64_t seed,
                 const std::string& path) {
  nlohmann::json j;
  j["format"] = "zsar-splits";
  j["version"] = 1;
  j["seen_count"] = seen_count;
  j["master_seed"] = seed;
  j["splits"] = nlohmann::json::array();
  for (std::size_t i = 0; i < splits.size(); ++i) {
    nlohmann::json s;
    s["index"] = i;
    s["seed"] = splits[i].seed;
    s["seen"] = splits[i].seen;
    s["unseen"] = splits[i].unseen;
    j["splits"].push_back(std::move(s));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write splits file '" + path + "'");
  out << j.dump(2) << "\n";
}

std::vector<Split> load_splits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open splits file '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError(path + ": not valid JSON");
  if (j.value("format", "") != "zsar-splits") {
    throw DataError(path + ": not a zsar splits file");
  }
  if (j.value("version", 0) != 1) {
    throw DataError(path + ": unsupported splits version " +
                    std::to_string(j.value("version", 0)));
  }
  std::vector<Split> out;
  try {
    for (const auto& s : j.at("splits")) {
      Split split;
      split.seed = s.at("seed").get<std::uint64_t>();
      split.seen = s.at("seen").get<std::vector<std::string>>();
      split.unseen = s.at("unseen").get<std::vector<std::string>>();
      if (split.seen.empty() || split.unseen.empty()) {
        throw DataError(path + ": a split has an empty side");
      }
      out.push_back(std::move(split));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad splits file: " + e.what());
  }
  if (out.empty()) throw DataError(path + ": no splits");
  return out;
}

}  // namespace zsar
