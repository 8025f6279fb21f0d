// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "taskrisk/aggregate.hpp"
#include "taskrisk/augment.hpp"
#include "taskrisk/baselines.hpp"
#include "taskrisk/checkpoint.hpp"
#include "taskrisk/config.hpp"
#include "taskrisk/corpus.hpp"
#include "taskrisk/eval.hpp"
#include "taskrisk/experiment.hpp"
#include "taskrisk/http_provider.hpp"
#include "taskrisk/tokenizer.hpp"
#include "taskrisk/train.hpp"

// Stage functions behind the command-line subcommands. Each reads its inputs
// from the output directory (or the configured source files), writes its
// artifacts there, and returns a short human-readable summary.
namespace taskrisk::pipeline {

namespace files {
inline constexpr const char* kCorpus = "corpus.normalized.csv";
inline constexpr const char* kSplit = "split.csv";
inline constexpr const char* kAugmented = "augmented.csv";
inline constexpr const char* kVocab = "vocab.txt";
inline constexpr const char* kModel = "model";  // checkpoint stem
inline constexpr const char* kTrainLog = "train.csv";
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kPredictions = "predictions.csv";
inline constexpr const char* kAttention = "attention.csv";
inline constexpr const char* kOccupationProfiles = "occupation_profiles.csv";
inline constexpr const char* kIndustryProfiles = "industry_profiles.csv";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kGradcheck = "gradcheck.csv";
}  // namespace files

inline std::filesystem::path out(const PipelineConfig& cfg, const std::string& name) {
  return cfg.paths.output_dir / name;
}

inline std::filesystem::path require(const PipelineConfig& cfg, const std::string& name, const std::string& stage) {
  auto p = out(cfg, name);
  if (!std::filesystem::exists(p))
    throw Error(ErrorCode::MissingArtifact, p.string() + " (produced by `" + stage + "`)");
  return p;
}

inline const std::filesystem::path& require_path(const std::filesystem::path& p, const std::string& field) {
  if (p.empty()) throw Error(ErrorCode::ConfigInvalid, field + ": required by this subcommand");
  return p;
}

inline std::unique_ptr<ProviderClient> make_provider(const PipelineConfig& cfg, bool force_mock) {
  if (force_mock || cfg.provider.kind == "mock") return std::make_unique<MockProvider>(cfg.seed);
  return std::make_unique<HttpProvider>(HttpProvider::from_env(cfg.provider.timeout_seconds, cfg.provider.retries));
}

// ---------------------------------------------------------------------------
// Loaders shared by several stages

inline std::vector<CorpusEntry> load_corpus(const PipelineConfig& cfg) {
  return read_normalized_corpus(require(cfg, files::kCorpus, "ingest"));
}

inline std::vector<AnnotatedExample> load_labeled(const PipelineConfig& cfg) { return labeled_examples(load_corpus(cfg)); }

inline SplitAssignment load_split(const PipelineConfig& cfg) { return read_split(require(cfg, files::kSplit, "split")); }

inline std::vector<AnnotatedExample> load_train_set(const PipelineConfig& cfg) {
  return read_augmented(require(cfg, files::kAugmented, "augment"));
}

inline Vocabulary load_vocab(const PipelineConfig& cfg) { return Vocabulary::load(require(cfg, files::kVocab, "build-vocab")); }

inline std::filesystem::path predictions_path(const PipelineConfig& cfg) {
  if (!cfg.paths.predictions.empty()) return cfg.paths.predictions;
  return require(cfg, files::kPredictions, "predict");
}

inline Checkpoint load_model(const PipelineConfig& cfg) {
  require(cfg, std::string(files::kModel) + ".json", "train");
  return load_checkpoint(out(cfg, files::kModel));
}

// ---------------------------------------------------------------------------
// Stages

inline std::string ingest(const PipelineConfig& cfg) {
  const auto tasks = ingest_corpus(require_path(cfg.paths.tasks, "paths.tasks"), cfg.source);
  std::vector<VoteRecord> votes;
  if (!cfg.paths.votes.empty()) votes = read_votes(cfg.paths.votes);
  if (!cfg.paths.occupations.empty()) {
    const auto occ = read_occupations(cfg.paths.occupations);
    if (!cfg.paths.industries.empty()) {
      validate_maps(tasks, occ, read_industries(cfg.paths.industries));
    } else {
      for (const auto& t : tasks)
        if (t.occupation_code && !occ.count(*t.occupation_code))
          throw Error(ErrorCode::UnknownOccupation, "task \"" + t.id + "\" references \"" + *t.occupation_code + "\"");
    }
  }
  const auto corpus = label_corpus(tasks, votes, cfg.vote_threshold);
  write_corpus(corpus, out(cfg, files::kCorpus));
  std::size_t labeled = 0;
  for (const auto& e : corpus) labeled += e.label.has_value();
  return fmt::format("ingested {} statements ({} with a consensus label) -> {}", corpus.size(), labeled,
                     out(cfg, files::kCorpus).string());
}

inline std::string split(const PipelineConfig& cfg) {
  const auto examples = load_labeled(cfg);
  const auto s = stratified_split(examples, cfg.split, cfg.seed);
  write_split(s, out(cfg, files::kSplit));
  return fmt::format("split {} labeled examples into train {} / eval {} / test {}", examples.size(), s.train.size(),
                     s.eval.size(), s.test.size());
}

// Writes the training set: human training examples followed by their
// paraphrases.
inline std::string augment(const PipelineConfig& cfg, ProviderClient& provider) {
  const auto examples = load_labeled(cfg);
  const auto s = load_split(cfg);
  const auto train_part = select(examples, s.train);
  const auto expanded = apply_policy(train_part, cfg.policy, provider, cfg.seed, cfg.augment);
  write_augmented(expanded, out(cfg, files::kAugmented));
  const auto before = class_counts(train_part), after = class_counts(expanded);
  return fmt::format("training set {}/{}/{} -> {}/{}/{} (S/C/N), {} paraphrases added", before[0], before[1],
                     before[2], after[0], after[1], after[2], expanded.size() - train_part.size());
}

inline std::string build_vocab(const PipelineConfig& cfg) {
  const auto train_set = load_train_set(cfg);
  const auto vocab = taskrisk::build_vocab(texts_of(train_set), cfg.tokenizer.vocab_size, cfg.tokenizer.min_freq);
  vocab.save(out(cfg, files::kVocab));
  return fmt::format("vocabulary of {} tokens -> {}", vocab.size(), out(cfg, files::kVocab).string());
}

inline ModelConfig model_config(const PipelineConfig& cfg, const Vocabulary& vocab) {
  auto m = cfg.model;
  m.vocab_size = vocab.size();
  m.max_len = cfg.tokenizer.max_len;
  return m;
}

inline std::string train(const PipelineConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch = {}) {
  const auto vocab = load_vocab(cfg);
  const auto train_set = load_train_set(cfg);
  const auto eval_set = select(load_labeled(cfg), load_split(cfg).eval);
  auto tc = cfg.train;
  tc.seed = cfg.seed;
  const auto mc = model_config(cfg, vocab);
  const auto result = taskrisk::train(encode_all(train_set, vocab, mc.max_len), encode_all(eval_set, vocab, mc.max_len),
                                      mc, tc, out(cfg, files::kModel), on_epoch);
  write_train_log(result.report, out(cfg, files::kTrainLog));
  return fmt::format("trained {} epoch(s); best eval macro-F1 at epoch {} -> {}", result.report.epochs.size(),
                     result.report.best_epoch, out(cfg, files::kModel).string());
}

// Scores the transformer and both baselines on the eval and test splits.
inline std::string evaluate(const PipelineConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto model = load_model(cfg);
  const auto train_set = load_train_set(cfg);
  const auto examples = load_labeled(cfg);
  const auto s = load_split(cfg);
  const std::string dataset(source_name(cfg.source));

  std::vector<Label> train_labels;
  for (const auto& e : train_set) train_labels.push_back(e.label);
  const auto logreg = TfidfLogistic::fit(texts_of(train_set), train_labels, cfg.logistic);
  const auto majority = MajorityBaseline::fit(train_labels);

  auto w = metrics_writer();
  std::string text;
  for (const auto& [name, ids] : {std::pair{"eval", s.eval}, std::pair{"test", s.test}}) {
    const auto part = select(examples, ids);
    ConfusionMatrix cm_model, cm_lr, cm_major;
    for (const auto& e : part) {
      cm_model.add(e.label, forward(model.params, encode(e.task.text, vocab, model.params.config.max_len)).predicted());
      cm_lr.add(e.label, logreg.predict(e.task.text));
      cm_major.add(e.label, majority.predict());
    }
    for (const auto& [model_name, cm] :
         {std::pair{"transformer", cm_model}, std::pair{"tfidf_logreg", cm_lr}, std::pair{"majority", cm_major}}) {
      const auto r = metrics(cm);
      append_metrics_rows(w, model_name, dataset, name, r);
      text += format_table(fmt::format("{} / {}", model_name, name), r);
    }
  }
  w.save(out(cfg, files::kMetrics));
  return text;
}

// Predicts every statement in the corpus, labeled or not, and exports the
// final-layer [CLS] attention per word.
inline std::string predict(const PipelineConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto model = load_model(cfg);
  const auto corpus = load_corpus(cfg);
  std::vector<PredictionRecord> preds;
  std::vector<AttentionExport> attention;
  for (const auto& e : corpus) {
    const auto tr = forward(model.params, encode(e.task.text, vocab, model.params.config.max_len));
    preds.push_back({e.task.id, tr.probabilities, tr.predicted(), e.task.occupation_code.value_or("")});
    attention.push_back({e.task.id, extract_attention(tr, vocab)});
  }
  write_predictions(preds, out(cfg, files::kPredictions));
  write_attention(attention, out(cfg, files::kAttention));
  return fmt::format("predicted {} statements -> {}", preds.size(), out(cfg, files::kPredictions).string());
}

inline std::string aggregate(const PipelineConfig& cfg) {
  const auto preds = read_predictions(predictions_path(cfg));
  const auto occ = read_occupations(require_path(cfg.paths.occupations, "paths.occupations"));
  const auto ind = read_industries(require_path(cfg.paths.industries, "paths.industries"));
  const auto profiles = occupation_profiles(preds, occ);
  const auto industries = industry_profiles(profiles, occ, ind, cfg.report.top_industries);
  write_occupation_profiles(profiles, out(cfg, files::kOccupationProfiles));
  write_industry_profiles(industries, out(cfg, files::kIndustryProfiles));
  const auto attention = read_attention(require(cfg, files::kAttention, "predict"));
  write_term_weights(term_weights(preds, attention, cfg.report.top_terms), cfg.paths.output_dir);
  return fmt::format("{} occupation profiles, {} industry profiles", profiles.size(), industries.industries.size());
}

inline std::string report(const PipelineConfig& cfg) {
  const auto preds = read_predictions(predictions_path(cfg));
  const auto occ = read_occupations(require_path(cfg.paths.occupations, "paths.occupations"));
  const auto profiles = occupation_profiles(preds, occ);
  const auto summary = summarize(profiles);
  std::optional<IndustryRankings> rankings;
  if (!cfg.paths.industries.empty())
    rankings = industry_profiles(profiles, occ, read_industries(cfg.paths.industries), cfg.report.top_industries);
  write_summary(summary_json(summary, rankings ? &*rankings : nullptr), out(cfg, files::kSummary));
  return format_summary(summary);
}

inline std::string sweep(const PipelineConfig& cfg, ProviderClient& provider) {
  const auto rows = run_sweep(cfg.sweep.kind, cfg.sweep.values, load_labeled(cfg), cfg.split,
                              experiment_settings(cfg), provider);
  const auto path = out(cfg, "sweep_" + cfg.sweep.name + ".csv");
  write_sweep(rows, path);
  std::string text = fmt::format("{:<10} {:>9} {:>9} {:>9}\n", "value", "precision", "recall", "f1");
  for (const auto& r : rows)
    text += fmt::format("{:<10} {:>9.4f} {:>9.4f} {:>9.4f}\n", r.value, r.test.precision, r.test.recall, r.test.f1);
  return text;
}

struct GradcheckOutcome {
  std::string text;
  bool pass = false;
};

inline GradcheckOutcome gradcheck(const PipelineConfig& cfg) {
  const auto report = gradient_check(gradcheck_config(), cfg.seed);
  csv::Writer w({"tensor", "entries", "max_rel_error", "max_abs_error", "pass"});
  GradcheckOutcome o{"", report.pass};
  for (const auto& t : report.tensors) {
    w.row({t.name, std::to_string(t.entries), fmt::format("{:.3e}", t.max_rel_error),
           fmt::format("{:.3e}", t.max_abs_error), t.pass ? "1" : "0"});
    o.text += fmt::format("{:<22} {:>10.3e} {}\n", t.name, t.max_rel_error, t.pass ? "ok" : "FAIL");
  }
  w.save(out(cfg, files::kGradcheck));
  o.text += fmt::format("gradient check {} (tolerance {:g})\n", report.pass ? "passed" : "FAILED", report.tolerance);
  return o;
}

}  // namespace taskrisk::pipeline
