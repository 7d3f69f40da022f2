#include "zsar/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

void write_le_doubles(std::ofstream& out, const double* values, std::size_t n) {
  std::vector<unsigned char> buf(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &values[i], 8);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void read_le_doubles(std::ifstream& in, double* values, std::size_t n, const std::string& path) {
  std::vector<unsigned char> buf(n * 8);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw DataError(path + ": truncated checkpoint blob");
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
    std::memcpy(&values[i], &bits, 8);
  }
}

std::string basename_of(const std::string& path) {
  const std::size_t pos = path.find_last_of("/\\");
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::string checkpoint_blob_path(const std::string& manifest_path) {
  if (manifest_path.size() > 5 && manifest_path.substr(manifest_path.size() - 5) == ".json") {
    return manifest_path.substr(0, manifest_path.size() - 5) + ".bin";
  }
  return manifest_path + ".bin";
}

void save_checkpoint(const ModelParams& params, std::size_t epoch, const std::string& path) {
  const std::string blob_path = checkpoint_blob_path(path);

  json manifest;
  manifest["format"] = "zsar-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["mode"] = to_string(params.config.mode);
  manifest["fusion"] = to_string(params.config.fusion);
  manifest["backbone_dim"] = params.config.backbone_dim;
  manifest["semantic_dim"] = params.config.semantic_dim;
  manifest["attention_tokens"] = params.config.attention_tokens;
  manifest["attention_key_dim"] = params.config.attention_key_dim;
  manifest["hallucinator_hidden"] = params.config.hallucinator_hidden;
  manifest["init_seed"] = params.config.init_seed;
  manifest["epoch"] = epoch;
  manifest["blob"] = basename_of(blob_path);

  json tensors = json::array();
  std::size_t total = 0;
  for (const Parameter* p : params.trainable()) {
    tensors.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    total += p->value.numel();
  }
  if (params.surrogate_object) {
    tensors.push_back(
        {{"name", "surrogate_object"}, {"shape", {params.surrogate_object->size()}}});
    total += params.surrogate_object->size();
  }
  manifest["tensors"] = std::move(tensors);
  manifest["blob_bytes"] = total * 8;

  std::ofstream mout(path);
  if (!mout) throw DataError("cannot write checkpoint manifest '" + path + "'");
  mout << manifest.dump(2) << "\n";

  std::ofstream bout(blob_path, std::ios::binary);
  if (!bout) throw DataError("cannot write checkpoint blob '" + blob_path + "'");
  for (const Parameter* p : params.trainable()) {
    write_le_doubles(bout, p->value.data(), p->value.numel());
  }
  if (params.surrogate_object) {
    write_le_doubles(bout, params.surrogate_object->data(), params.surrogate_object->size());
  }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream min(path);
  if (!min) throw DataError("cannot open checkpoint manifest '" + path + "'");
  json manifest = json::parse(min, nullptr, false);
  if (manifest.is_discarded()) throw DataError(path + ": checkpoint manifest is not valid JSON");
  if (manifest.value("format", "") != "zsar-checkpoint") {
    throw DataError(path + ": not a zsar checkpoint manifest");
  }
  const int version = manifest.value("version", -1);
  if (version != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }

  ModelConfig cfg;
  LoadedCheckpoint loaded;
  bool has_surrogate = false;
  try {
    cfg.mode = model_mode_from_string(manifest.at("mode").get<std::string>());
    cfg.fusion = fusion_mode_from_string(manifest.at("fusion").get<std::string>());
    cfg.backbone_dim = manifest.at("backbone_dim").get<std::size_t>();
    cfg.semantic_dim = manifest.at("semantic_dim").get<std::size_t>();
    cfg.attention_tokens = manifest.at("attention_tokens").get<std::size_t>();
    cfg.attention_key_dim = manifest.at("attention_key_dim").get<std::size_t>();
    auto hidden = manifest.at("hallucinator_hidden").get<std::vector<std::size_t>>();
    if (hidden.size() != 3) throw DataError(path + ": hallucinator_hidden must list 3 widths");
    cfg.hallucinator_hidden = {hidden[0], hidden[1], hidden[2]};
    cfg.init_seed = manifest.at("init_seed").get<std::uint64_t>();
    loaded.epoch = manifest.at("epoch").get<std::size_t>();

    loaded.params = init_model(cfg);
    auto expected = loaded.params.trainable();
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() == expected.size() + 1 &&
        tensors.back().at("name").get<std::string>() == "surrogate_object") {
      has_surrogate = true;
    } else if (tensors.size() != expected.size()) {
      throw DataError(path + ": manifest lists " + std::to_string(tensors.size()) +
                      " tensors, model has " + std::to_string(expected.size()));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& t = tensors.at(i);
      if (t.at("name").get<std::string>() != expected[i]->name) {
        throw DataError(path + ": tensor " + std::to_string(i) + " is '" +
                        t.at("name").get<std::string>() + "', expected '" + expected[i]->name +
                        "'");
      }
      if (t.at("shape").get<std::vector<std::size_t>>() != expected[i]->value.shape()) {
        throw DataError(path + ": shape mismatch for tensor '" + expected[i]->name + "'");
      }
    }
    if (has_surrogate) {
      const auto shape = tensors.back().at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 1 || shape[0] != cfg.semantic_dim) {
        throw DataError(path + ": surrogate_object must be a vector of width " +
                        std::to_string(cfg.semantic_dim));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": bad checkpoint manifest: " + e.what());
  }

  const std::string blob_path = checkpoint_blob_path(path);
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin) throw DataError("cannot open checkpoint blob '" + blob_path + "'");
  for (Parameter* p : loaded.params.trainable()) {
    read_le_doubles(bin, p->value.data(), p->value.numel(), blob_path);
    p->zero_grad();
  }
  if (has_surrogate) {
    std::vector<double> surrogate(loaded.params.config.semantic_dim);
    read_le_doubles(bin, surrogate.data(), surrogate.size(), blob_path);
    loaded.params.surrogate_object = std::move(surrogate);
  }
  char extra;
  if (bin.read(&extra, 1) && bin.gcount() == 1) {
    throw DataError(blob_path + ": blob is longer than the manifest total");
  }
  return loaded;
}

}  // namespace zsar
