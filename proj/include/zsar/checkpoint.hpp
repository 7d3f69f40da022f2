#pragma once

#include <cstddef>
#include <string>

#include "zsar/model.hpp"

namespace zsar {

// A checkpoint is a JSON manifest (mode flags, shapes, seed, epoch, tensor
// list) plus a sibling .bin blob of little-endian fp64 values in manifest
// order. Round-trips are bit-exact.
void save_checkpoint(const ModelParams& params, std::size_t epoch, const std::string& path);

struct LoadedCheckpoint {
  ModelParams params;
  std::size_t epoch = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Path of the blob file next to a manifest path.
std::string checkpoint_blob_path(const std::string& manifest_path);

}  // namespace zsar
