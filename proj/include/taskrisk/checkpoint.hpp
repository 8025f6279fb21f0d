// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "taskrisk/model.hpp"

namespace taskrisk {

// A checkpoint is a pair of files sharing a stem: `<stem>.json` holds the
// config, seed and tensor table; `<stem>.bin` holds every tensor as
// little-endian IEEE-754 doubles, concatenated in manifest order.
struct CheckpointPaths {
  std::filesystem::path manifest;
  std::filesystem::path blob;

  static CheckpointPaths from_stem(const std::filesystem::path& stem) {
    auto m = stem, b = stem;
    m += ".json";
    b += ".bin";
    return {m, b};
  }
};

inline constexpr int kCheckpointFormat = 1;

inline nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["max_len"] = c.max_len;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_layers"] = c.n_layers;
  j["d_ff"] = c.d_ff;
  j["n_classes"] = c.n_classes;
  j["dropout_rate"] = c.dropout_rate;
  j["init_std"] = c.init_std;
  j["layer_norm_eps"] = c.layer_norm_eps;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.init_std = j.at("init_std").get<double>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.validate();
  return c;
}

inline void save_checkpoint(const ModelParams& params, std::uint64_t seed, const std::filesystem::path& stem) {
  const auto paths = CheckpointPaths::from_stem(stem);
  if (paths.manifest.has_parent_path()) std::filesystem::create_directories(paths.manifest.parent_path());

  nlohmann::ordered_json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["dtype"] = "float64-le";
  manifest["seed"] = seed;
  manifest["config"] = config_to_json(params.config);
  auto tensors = nlohmann::ordered_json::array();

  std::string blob;
  blob.reserve(params.parameter_count() * 8);
  params.visit([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}});
    for (double v : m.values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  });
  manifest["tensors"] = std::move(tensors);

  std::ofstream mf(paths.manifest, std::ios::binary | std::ios::trunc);
  std::ofstream bf(paths.blob, std::ios::binary | std::ios::trunc);
  if (!mf || !bf) throw Error(ErrorCode::Io, "cannot write checkpoint " + stem.string());
  mf << manifest.dump(2) << '\n';
  bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  const auto paths = CheckpointPaths::from_stem(stem);
  if (!std::filesystem::exists(paths.manifest) || !std::filesystem::exists(paths.blob))
    throw Error(ErrorCode::MissingArtifact, "checkpoint " + stem.string());
  nlohmann::json manifest;
  try {
    std::ifstream mf(paths.manifest);
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, "bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", 0) != kCheckpointFormat)
    throw Error(ErrorCode::Io, "unsupported checkpoint format");

  Checkpoint ck;
  ck.seed = manifest.at("seed").get<std::uint64_t>();
  ck.params = ModelParams::zeros(config_from_json(manifest.at("config")));

  std::ifstream bf(paths.blob, std::ios::binary);
  const std::string blob((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
  const auto& tensors = manifest.at("tensors");
  std::size_t index = 0, offset = 0;
  ck.params.visit([&](const std::string& name, Matrix& m) {
    if (index >= tensors.size()) throw Error(ErrorCode::Io, "checkpoint is missing tensor " + name);
    const auto& t = tensors[index++];
    const auto shape = t.at("shape");
    if (t.at("name").get<std::string>() != name || shape[0].get<std::size_t>() != m.rows() ||
        shape[1].get<std::size_t>() != m.cols())
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor " + name + " does not match config");
    if (offset + m.size() * 8 > blob.size()) throw Error(ErrorCode::Io, "checkpoint blob truncated");
    for (auto& v : m.values()) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + b])) << (8 * b);
      v = std::bit_cast<double>(bits);
      offset += 8;
    }
  });
  if (index != tensors.size() || offset != blob.size())
    throw Error(ErrorCode::Io, "checkpoint has trailing tensors or bytes");
  return ck;
}

}  // namespace taskrisk
