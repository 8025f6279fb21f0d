// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "taskrisk/augment.hpp"
#include "taskrisk/corpus.hpp"
#include "taskrisk/eval.hpp"
#include "taskrisk/tokenizer.hpp"
#include "taskrisk/train.hpp"

namespace taskrisk {

struct TokenizerConfig {
  std::size_t vocab_size = 2000;
  std::size_t min_freq = 1;
  std::size_t max_len = 64;
};

struct ExperimentSettings {
  TokenizerConfig tokenizer;
  ModelConfig model;  // vocab_size and max_len are overwritten per run
  TrainConfig train;
  AugmentOptions augment;
  std::uint64_t seed = 42;
};

struct ExperimentResult {
  Vocabulary vocab;
  TrainResult training;
  MetricsReport eval;
  MetricsReport test;
};

inline std::vector<EncodedExample> encode_all(const std::vector<AnnotatedExample>& examples, const Vocabulary& vocab,
                                              std::size_t max_len) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({encode(e.task.text, vocab, max_len), e.label});
  return out;
}

inline std::vector<std::string> texts_of(const std::vector<AnnotatedExample>& examples) {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.task.text);
  return out;
}

// Vocabulary from the training texts, then train and score eval and test.
inline ExperimentResult run_experiment(const std::vector<AnnotatedExample>& train_set,
                                       const std::vector<AnnotatedExample>& eval_set,
                                       const std::vector<AnnotatedExample>& test_set, const ExperimentSettings& s) {
  ExperimentResult r;
  r.vocab = build_vocab(texts_of(train_set), s.tokenizer.vocab_size, s.tokenizer.min_freq);
  auto model = s.model;
  model.vocab_size = r.vocab.size();
  model.max_len = s.tokenizer.max_len;
  auto train_cfg = s.train;
  train_cfg.seed = s.seed;
  const auto tr = encode_all(train_set, r.vocab, model.max_len);
  const auto ev = encode_all(eval_set, r.vocab, model.max_len);
  r.training = train(tr, ev, model, train_cfg);
  r.eval = evaluate(r.training.best, ev).metrics;
  if (!test_set.empty()) r.test = evaluate(r.training.best, encode_all(test_set, r.vocab, model.max_len)).metrics;
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepKind { AUGMENTATION, TRAIN_FRACTION };

struct SweepRow {
  std::string value;
  double sort_key = 0.0;
  MetricsReport test;
};

namespace detail {

inline AugmentationPolicy policy_from_value(const std::string& v, double& key) {
  if (v == "Original" || v == "original") {
    key = -2.0;
    return AugmentationPolicy::original();
  }
  if (v == "Balanced" || v == "balanced") {
    key = -1.0;
    return AugmentationPolicy::balanced();
  }
  try {
    std::size_t used = 0;
    key = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "augmentation sweep value '" + v + "' is not Original, Balanced or a multiplier");
  }
  auto p = AugmentationPolicy::times(key);
  p.validate();
  return p;
}

inline double fraction_from_value(const std::string& v) {
  double f = 0.0;
  try {
    std::size_t used = 0;
    f = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "train fraction '" + v + "' is not a number");
  }
  if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0,1)");
  return f;
}

}  // namespace detail

// One full train + test evaluation per value, all sharing `s.seed`.
// AUGMENTATION reuses one split at `ratios` and augments only its training
// part; TRAIN_FRACTION re-splits at (f, (1-f)/2, (1-f)/2). Rows come back
// sorted by value (Original and Balanced before the multipliers).
inline std::vector<SweepRow> run_sweep(SweepKind kind, const std::vector<std::string>& values,
                                       const std::vector<AnnotatedExample>& examples, const SplitRatios& ratios,
                                       const ExperimentSettings& s, ProviderClient& provider) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one value");
  std::vector<SweepRow> rows;
  if (kind == SweepKind::AUGMENTATION) {
    const auto split = stratified_split(examples, ratios, s.seed);
    const auto train_part = select(examples, split.train);
    const auto eval_part = select(examples, split.eval);
    const auto test_part = select(examples, split.test);
    for (const auto& v : values) {
      SweepRow row{v, 0.0, {}};
      const auto policy = detail::policy_from_value(v, row.sort_key);
      const auto augmented = apply_policy(train_part, policy, provider, s.seed, s.augment);
      row.test = run_experiment(augmented, eval_part, test_part, s).test;
      rows.push_back(std::move(row));
    }
  } else {
    for (const auto& v : values) {
      const double f = detail::fraction_from_value(v);
      const SplitRatios r{f, (1.0 - f) / 2.0, (1.0 - f) / 2.0};
      const auto split = stratified_split(examples, r, s.seed);
      SweepRow row{v, f, {}};
      row.test = run_experiment(select(examples, split.train), select(examples, split.eval),
                                select(examples, split.test), s)
                     .test;
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.sort_key < b.sort_key; });
  return rows;
}

inline void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  csv::Writer w({"value", "precision", "recall", "f1"});
  for (const auto& r : rows)
    w.row({r.value, fmt::format("{:.6f}", r.test.precision), fmt::format("{:.6f}", r.test.recall),
           fmt::format("{:.6f}", r.test.f1)});
  w.save(path);
}

}  // namespace taskrisk
