// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

// Regenerates the synthetic datasets shipped under data/.
//
//   make_fixtures --out data

#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "taskrisk/synthetic.hpp"

namespace fs = std::filesystem;
using namespace taskrisk;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write synthetic fixture datasets"};
  std::string out = "data";
  std::uint64_t seed = 7;
  app.add_option("--out", out, "Destination directory");
  app.add_option("--seed", seed, "Generator seed for the keyword corpus");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  const auto synth = root / "synthetic";
  fs::create_directories(synth);
  synthetic::write_dataset(synth, synthetic::corpus({100, 100, 100}, seed));
  write_text(synth / "config.json", R"({
  "paths": {
    "tasks": "tasks.csv",
    "votes": "votes.csv",
    "occupations": "occupations.csv",
    "industries": "industries.csv",
    "output_dir": "../../out/synthetic"
  },
  "source": "SYNTHETIC",
  "seed": 42,
  "vote_threshold": 4,
  "split": {"train": 0.8, "eval": 0.1, "test": 0.1},
  "augmentation": {"policy": "multiplier", "multiplier": 2, "provider": {"kind": "mock"}},
  "tokenizer": {"vocab_size": 2000, "min_freq": 1, "max_len": 64},
  "model": {"d_model": 64, "n_heads": 4, "n_layers": 2, "d_ff": 128, "dropout_rate": 0.1},
  "train": {"epochs": 30, "batch_size": 16, "learning_rate": 0.0002, "optimizer": "adam", "early_stop_patience": 30},
  "sweep": {"name": "train_fraction", "kind": "TRAIN_FRACTION", "values": [0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2]}
}
)");

  const auto onet = root / "onet_fixture";
  const auto fx = synthetic::onet_aggregation({244, 602, 128});
  fs::create_directories(onet);
  write_predictions(fx.predictions, onet / "predictions.csv");
  synthetic::write_occupations(fx.occupations, onet / "occupations.csv");
  synthetic::write_industries(fx.industries, onet / "industries.csv");
  write_text(onet / "config.json", R"({
  "paths": {
    "occupations": "occupations.csv",
    "industries": "industries.csv",
    "predictions": "predictions.csv",
    "output_dir": "../../out/onet_fixture"
  }
}
)");
  fmt::print("wrote {} and {}\n", synth.string(), onet.string());
  return 0;
}
