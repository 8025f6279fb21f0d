// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

// Command-line driver. Every subcommand reads the same config file and works
// on the artifacts in its output directory.
//
// Exit codes: 0 success, 1 validation error (bad flags or config, missing
// stage output), 2 runtime error.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "taskrisk/pipeline.hpp"

namespace {

using taskrisk::ErrorCode;
using taskrisk::PipelineConfig;
namespace pl = taskrisk::pipeline;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string provider;
};

PipelineConfig resolve(const Options& o) {
  auto cfg = taskrisk::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.paths.output_dir = o.out;
  std::filesystem::create_directories(cfg.paths.output_dir);
  return cfg;
}

int run(const std::string& cmd, const Options& o) {
  const auto cfg = resolve(o);
  const bool mock = o.provider == "mock";
  if (cmd == "ingest") fmt::print("{}\n", pl::ingest(cfg));
  else if (cmd == "split") fmt::print("{}\n", pl::split(cfg));
  else if (cmd == "augment") fmt::print("{}\n", pl::augment(cfg, *pl::make_provider(cfg, mock)));
  else if (cmd == "build-vocab") fmt::print("{}\n", pl::build_vocab(cfg));
  else if (cmd == "train") {
    fmt::print("{}\n", pl::train(cfg, [](const taskrisk::EpochStats& e) {
      fmt::print("epoch {:>3}  train_loss {:.4f}  eval_loss {:.4f}  eval_f1 {:.4f}\n", e.epoch, e.train_loss,
                 e.eval_loss, e.eval_f1);
    }));
  } else if (cmd == "eval") fmt::print("{}", pl::evaluate(cfg));
  else if (cmd == "predict") fmt::print("{}\n", pl::predict(cfg));
  else if (cmd == "aggregate") fmt::print("{}\n", pl::aggregate(cfg));
  else if (cmd == "report") fmt::print("{}", pl::report(cfg));
  else if (cmd == "sweep") fmt::print("{}", pl::sweep(cfg, *pl::make_provider(cfg, mock)));
  else if (cmd == "gradcheck") {
    const auto g = pl::gradcheck(cfg);
    fmt::print("{}", g.text);
    return g.pass ? 0 : kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task automatability pipeline"};
  app.require_subcommand(1, 1);
  Options o;
  const char* commands[][2] = {
      {"ingest", "Normalize the task corpus and resolve votes"},
      {"split", "Stratified train/eval/test split"},
      {"augment", "Paraphrase training examples per the augmentation policy"},
      {"build-vocab", "Build the subword vocabulary from the training set"},
      {"train", "Train the transformer classifier"},
      {"eval", "Score the model and baselines on eval and test"},
      {"predict", "Predict every statement and export attention"},
      {"aggregate", "Occupation and industry profiles, term weights"},
      {"report", "Write summary.json from predictions"},
      {"sweep", "Run the configured augmentation or train-fraction sweep"},
      {"gradcheck", "Verify analytic gradients on a tiny model"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Pipeline config (JSON)")->required();
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Override the output directory");
    sub->add_option("--provider", o.provider, "Paraphrase provider override")->check(CLI::IsMember({"mock"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, o);
  } catch (const taskrisk::Error& e) {
    std::fprintf(stderr, "taskrisk %s: %s\n", cmd.c_str(), e.what());
    return e.code() == ErrorCode::ConfigInvalid || e.code() == ErrorCode::MissingArtifact ? kExitValidation
                                                                                          : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "taskrisk %s: %s\n", cmd.c_str(), e.what());
    return kExitRuntime;
  }
}
