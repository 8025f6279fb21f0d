// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskrisk/augment.hpp"
#include "taskrisk/baselines.hpp"
#include "taskrisk/corpus.hpp"
#include "taskrisk/experiment.hpp"
#include "taskrisk/model.hpp"
#include "taskrisk/train.hpp"

namespace taskrisk {

struct PathsConfig {
  std::filesystem::path tasks;
  std::filesystem::path votes;
  std::filesystem::path occupations;
  std::filesystem::path industries;
  std::filesystem::path predictions;  // optional; defaults to <output_dir>/predictions.csv
  std::filesystem::path output_dir = "out";
};

struct ProviderConfig {
  std::string kind = "mock";  // "mock" or "http"
  double timeout_seconds = 30.0;
  int retries = 2;
};

struct ReportConfig {
  std::size_t top_industries = 10;
  std::size_t top_terms = 100;
};

struct SweepConfig {
  std::string name = "train_fraction";
  SweepKind kind = SweepKind::TRAIN_FRACTION;
  std::vector<std::string> values{"0.8", "0.7", "0.6", "0.5", "0.4", "0.3", "0.2"};
};

struct PipelineConfig {
  PathsConfig paths;
  Source source = Source::ONET;
  std::uint64_t seed = 42;
  int vote_threshold = 4;
  SplitRatios split;
  AugmentationPolicy policy;
  AugmentOptions augment;
  ProviderConfig provider;
  TokenizerConfig tokenizer;
  ModelConfig model;  // vocab_size and max_len are filled from the vocabulary and tokenizer
  TrainConfig train;
  LogisticConfig logistic;
  ReportConfig report;
  SweepConfig sweep;
};

namespace detail {

// Walks one JSON object, remembering which keys were read so the rest can be
// rejected with their full path.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const auto* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v->is_number_integer()) fail(child(key), "expected an integer");
        if constexpr (!std::is_same_v<T, int>)
          if (v->is_number_integer() && v->get<long long>() < 0) fail(child(key), "must be >= 0");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) fail(child(key), "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) fail(child(key), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) fail(child(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(child(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void with_object(StrictObject& parent, const std::string& key, F&& f) {
  if (const auto* v = parent.get(key)) {
    StrictObject o(*v, parent.child(key));
    f(o);
    o.finish();
  }
}

inline void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) StrictObject::fail(path, what);
}

}  // namespace detail

inline std::optional<AugmentationPolicy> parse_policy_name(std::string_view s) {
  if (s == "original") return AugmentationPolicy::original();
  if (s == "balanced") return AugmentationPolicy::balanced();
  return std::nullopt;
}

// Parses a config document. Relative paths are resolved against `base_dir`.
inline PipelineConfig parse_config(const nlohmann::json& root, const std::filesystem::path& base_dir) {
  using detail::check;
  PipelineConfig cfg;
  detail::StrictObject top(root, "");

  detail::with_object(top, "paths", [&](detail::StrictObject& o) {
    std::string tasks, votes, occ, ind, preds, out = "out";
    o.read("tasks", tasks);
    o.read("votes", votes);
    o.read("occupations", occ);
    o.read("industries", ind);
    o.read("predictions", preds);
    o.read("output_dir", out);
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
      if (p.empty()) return {};
      std::filesystem::path path(p);
      return path.is_absolute() ? path : (base_dir / path).lexically_normal();
    };
    cfg.paths = {resolve(tasks), resolve(votes), resolve(occ), resolve(ind), resolve(preds), resolve(out)};
  });

  std::string source = "ONET";
  top.read("source", source);
  auto src = parse_source(source);
  check(src.has_value(), "source", "must be ONET, ESCO, AULMI or SYNTHETIC");
  cfg.source = *src;
  top.read("seed", cfg.seed);
  top.read("vote_threshold", cfg.vote_threshold);
  check(cfg.vote_threshold >= 3 && cfg.vote_threshold <= 5, "vote_threshold", "must be in [3,5]");

  detail::with_object(top, "split", [&](detail::StrictObject& o) {
    o.read("train", cfg.split.train);
    o.read("eval", cfg.split.eval);
    o.read("test", cfg.split.test);
  });
  try {
    validate_ratios(cfg.split);
  } catch (const Error& e) {
    detail::StrictObject::fail("split", e.what());
  }

  detail::with_object(top, "augmentation", [&](detail::StrictObject& o) {
    std::string policy = "original";
    o.read("policy", policy);
    if (policy == "multiplier") {
      double m = 0.0;
      o.read("multiplier", m);
      cfg.policy = AugmentationPolicy::times(m);
    } else if (policy == "targets") {
      ClassCounts t{};
      detail::with_object(o, "targets", [&](detail::StrictObject& to) {
        for (int c = 0; c < kNumClasses; ++c) to.read(std::string(label_name(label_from_index(c))), t[c]);
      });
      cfg.policy = AugmentationPolicy::target_counts(t);
    } else if (auto p = parse_policy_name(policy)) {
      cfg.policy = *p;
    } else {
      detail::StrictObject::fail(o.child("policy"), "must be original, balanced, multiplier or targets");
    }
    try {
      cfg.policy.validate();
    } catch (const Error& e) {
      detail::StrictObject::fail(o.child("policy"), e.what());
    }
    o.read("similarity_floor", cfg.augment.similarity_floor);
    o.read("temperature", cfg.augment.temperature);
    o.read("oversample", cfg.augment.oversample);
    check(cfg.augment.similarity_floor >= 0.0 && cfg.augment.similarity_floor <= 1.0,
          o.child("similarity_floor"), "must be in [0,1]");
    check(cfg.augment.temperature >= 0.0 && cfg.augment.temperature <= 2.0, o.child("temperature"),
          "must be in [0,2]");
    check(cfg.augment.oversample >= 0, o.child("oversample"), "must be >= 0");
    detail::with_object(o, "provider", [&](detail::StrictObject& po) {
      po.read("kind", cfg.provider.kind);
      po.read("timeout_seconds", cfg.provider.timeout_seconds);
      po.read("retries", cfg.provider.retries);
      check(cfg.provider.kind == "mock" || cfg.provider.kind == "http", po.child("kind"), "must be mock or http");
      check(cfg.provider.timeout_seconds > 0.0, po.child("timeout_seconds"), "must be > 0");
      check(cfg.provider.retries >= 0, po.child("retries"), "must be >= 0");
    });
  });

  detail::with_object(top, "tokenizer", [&](detail::StrictObject& o) {
    o.read("vocab_size", cfg.tokenizer.vocab_size);
    o.read("min_freq", cfg.tokenizer.min_freq);
    o.read("max_len", cfg.tokenizer.max_len);
    check(cfg.tokenizer.vocab_size >= 8, o.child("vocab_size"), "must be >= 8");
    check(cfg.tokenizer.min_freq >= 1, o.child("min_freq"), "must be >= 1");
    check(cfg.tokenizer.max_len >= 3, o.child("max_len"), "must be >= 3");
  });

  detail::with_object(top, "model", [&](detail::StrictObject& o) {
    o.read("d_model", cfg.model.d_model);
    o.read("n_heads", cfg.model.n_heads);
    o.read("n_layers", cfg.model.n_layers);
    o.read("d_ff", cfg.model.d_ff);
    o.read("dropout_rate", cfg.model.dropout_rate);
    o.read("init_std", cfg.model.init_std);
    o.read("layer_norm_eps", cfg.model.layer_norm_eps);
  });
  cfg.model.max_len = cfg.tokenizer.max_len;
  cfg.model.vocab_size = cfg.tokenizer.vocab_size;
  try {
    cfg.model.validate();
  } catch (const Error& e) {
    detail::StrictObject::fail("model", e.what());
  }

  detail::with_object(top, "train", [&](detail::StrictObject& o) {
    o.read("epochs", cfg.train.epochs);
    o.read("batch_size", cfg.train.batch_size);
    o.read("learning_rate", cfg.train.learning_rate);
    std::string opt = "adam";
    o.read("optimizer", opt);
    check(opt == "adam" || opt == "sgd", o.child("optimizer"), "must be adam or sgd");
    cfg.train.optimizer = opt == "adam" ? OptimizerKind::ADAM : OptimizerKind::SGD;
    o.read("beta1", cfg.train.beta1);
    o.read("beta2", cfg.train.beta2);
    o.read("epsilon", cfg.train.epsilon);
    o.read("early_stop_patience", cfg.train.early_stop_patience);
    double clip = 0.0;
    o.read("gradient_clip_norm", clip);
    if (clip > 0.0) cfg.train.gradient_clip_norm = clip;
    o.read("track_train_accuracy", cfg.train.track_train_accuracy);
  });
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    detail::StrictObject::fail("train", e.what());
  }

  detail::with_object(top, "baseline", [&](detail::StrictObject& o) {
    o.read("l2_lambda", cfg.logistic.l2_lambda);
    o.read("learning_rate", cfg.logistic.learning_rate);
    o.read("max_iterations", cfg.logistic.max_iterations);
    check(cfg.logistic.l2_lambda >= 0.0, o.child("l2_lambda"), "must be >= 0");
    check(cfg.logistic.learning_rate > 0.0, o.child("learning_rate"), "must be > 0");
  });

  detail::with_object(top, "report", [&](detail::StrictObject& o) {
    o.read("top_industries", cfg.report.top_industries);
    o.read("top_terms", cfg.report.top_terms);
  });

  detail::with_object(top, "sweep", [&](detail::StrictObject& o) {
    o.read("name", cfg.sweep.name);
    std::string kind = "TRAIN_FRACTION";
    o.read("kind", kind);
    check(kind == "AUGMENTATION" || kind == "TRAIN_FRACTION", o.child("kind"),
          "must be AUGMENTATION or TRAIN_FRACTION");
    cfg.sweep.kind = kind == "AUGMENTATION" ? SweepKind::AUGMENTATION : SweepKind::TRAIN_FRACTION;
    if (const auto* v = o.get("values")) {
      check(v->is_array() && !v->empty(), o.child("values"), "expected a non-empty array");
      cfg.sweep.values.clear();
      for (const auto& x : *v) {
        if (x.is_string()) cfg.sweep.values.push_back(x.get<std::string>());
        else if (x.is_number()) cfg.sweep.values.push_back(fmt::format("{}", x.get<double>()));
        else detail::StrictObject::fail(o.child("values"), "entries must be numbers or strings");
      }
    }
    check(!cfg.sweep.name.empty(), o.child("name"), "must be non-empty");
  });

  top.finish();
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::ConfigInvalid, "config file not found: " + path.string());
  nlohmann::json j;
  try {
    std::ifstream f(path);
    j = nlohmann::json::parse(f, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  auto cfg = parse_config(j, path.parent_path());
  for (const auto& [field, p] : {std::pair{"paths.tasks", cfg.paths.tasks}, std::pair{"paths.votes", cfg.paths.votes},
                                 std::pair{"paths.occupations", cfg.paths.occupations},
                                 std::pair{"paths.industries", cfg.paths.industries},
                                 std::pair{"paths.predictions", cfg.paths.predictions}})
    if (!p.empty() && !std::filesystem::exists(p))
      throw Error(ErrorCode::ConfigInvalid, std::string(field) + ": no such file " + p.string());
  return cfg;
}

// Settings for a single train run derived from the pipeline config.
inline ExperimentSettings experiment_settings(const PipelineConfig& cfg) {
  return {cfg.tokenizer, cfg.model, cfg.train, cfg.augment, cfg.seed};
}

}  // namespace taskrisk
