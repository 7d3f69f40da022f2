#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zsar {

// One random seen/unseen partition of the class set. seen and unseen are
// disjoint, cover all classes, and keep the input class order.
struct Split {
  std::uint64_t seed = 0;
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
};

// splitmix64; used to derive independent stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// n_splits independent seeded shuffles of the class list; the first
// seen_count classes of each shuffle are the seen set. Deterministic for a
// given (seed, class order); duplicate splits across draws are permitted.
std::vector<Split> generate_splits(const std::vector<std::string>& class_ids,
                                   std::size_t seen_count, std::size_t n_splits,
                                   std::uint64_t seed);

void save_splits(const std::vector<Split>& splits, std::size_t seen_count, std::uint64_t seed,
                 const std::string& path);
std::vector<Split> load_splits(const std::string& path);

}  // namespace zsar
