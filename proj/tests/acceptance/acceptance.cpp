// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   acceptance            run all ten
//   acceptance --only 4   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "taskrisk/pipeline.hpp"
#include "taskrisk/synthetic.hpp"

namespace fs = std::filesystem;
using namespace taskrisk;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(fmt::format("{}{}", ok ? "" : "FAILED ", what));
  }
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("taskrisk_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  Outcome o;
  Timer timer;
  double worst = 0.0;
  std::string worst_name;
  bool all = true;
  for (double rate : {0.0, 0.1}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto cfg = gradcheck_config();
      cfg.dropout_rate = rate;
      const auto r = gradient_check(cfg, seed);
      all = all && r.pass;
      for (const auto& t : r.tensors)
        if (t.max_rel_error > worst) worst = t.max_rel_error, worst_name = t.name;
    }
  }
  const auto cfg = gradcheck_config();
  o.require(cfg.d_model == 8 && cfg.n_layers == 1, "d_model=8, n_layers=1");
  o.require(all && worst <= 1e-6, fmt::format("10 checks, every tensor <= 1e-6 (worst {:.2e} on {})", worst, worst_name));
  o.require(timer.seconds() < 30.0, fmt::format("{:.1f}s < 30s", timer.seconds()));
  return o;
}

Outcome attention_invariants() {
  Outcome o;
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> normal(0.0, 2.0);
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& v : m.values()) v = normal(gen);
    return m;
  };
  double worst_sum = 0.0;
  std::size_t masked_nonzero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t L = 1 + gen() % 12, dk = 1 + gen() % 8, dv = 1 + gen() % 8;
    std::vector<int> mask(L);
    for (auto& m : mask) m = gen() % 4 != 0;
    mask[gen() % L] = 1;
    const auto r = attention(random_matrix(L, dk), random_matrix(L, dk), random_matrix(L, dv), mask);
    for (std::size_t i = 0; i < L; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        if (mask[j]) sum += r.weights(i, j);
        else masked_nonzero += r.weights(i, j) != 0.0;
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  o.require(worst_sum <= 1e-9, fmt::format("row sums within {:.1e} of 1", worst_sum));
  o.require(masked_nonzero == 0, fmt::format("{} nonzero masked weights", masked_nonzero));

  bool single_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_matrix(1, 1 + gen() % 6);
    const std::vector<int> one = {1};
    const auto r = attention(random_matrix(1, 3), random_matrix(1, 3), v, one);
    single_ok = single_ok && r.weights(0, 0) == 1.0 && r.output == v;
  }
  o.require(single_ok, "L=1 gives weight 1.0 and output V");
  return o;
}

Outcome softmax_oracles() {
  Outcome o;
  const auto u = softmax3({0, 0, 0});
  double du = 0;
  for (double p : u) du = std::max(du, std::abs(p - 1.0 / 3.0));
  o.require(du <= 1e-12, fmt::format("softmax(0,0,0) off by {:.1e}", du));

  const auto p = softmax3({1, 2, 3});
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  double dp = 0;
  for (int i = 0; i < 3; ++i) dp = std::max(dp, std::abs(p[i] - std::exp(i + 1.0) / z));
  o.require(dp <= 1e-12, fmt::format("softmax(1,2,3) = ({:.5f}, {:.5f}, {:.5f}), off by {:.1e}", p[0], p[1], p[2], dp));

  bool one_hot = true;
  for (int c = 0; c < 3; ++c) {
    std::array<double, 3> q{};
    q[c] = 1.0;
    one_hot = one_hot && cross_entropy(q, label_from_index(c)) == 0.0;
  }
  o.require(one_hot, "one-hot cross-entropy is 0");
  double du3 = 0;
  for (int c = 0; c < 3; ++c)
    du3 = std::max(du3, std::abs(cross_entropy({1.0 / 3, 1.0 / 3, 1.0 / 3}, label_from_index(c)) - std::log(3.0)));
  o.require(du3 <= 1e-12, fmt::format("uniform cross-entropy off ln 3 by {:.1e}", du3));
  return o;
}

Outcome learning_sanity() {
  Outcome o;
  const auto corpus = synthetic::keyword_corpus();
  const auto vocab = build_vocab(texts_of(corpus), 2000);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.max_len = 64;
  TrainConfig tc;
  tc.epochs = 50;
  tc.early_stop_patience = 50;
  tc.seed = 42;
  tc.track_train_accuracy = true;
  const auto data = encode_all(corpus, vocab, mc.max_len);

  Timer timer;
  int first_epoch = 0;
  double best_acc = 0.0;
  const auto result = train(data, data, mc, tc, std::nullopt, [&](const EpochStats& e) {
    best_acc = std::max(best_acc, *e.train_accuracy);
    if (!first_epoch && *e.train_accuracy >= 0.99) first_epoch = e.epoch;
  });
  const double secs = timer.seconds();
  o.require(first_epoch > 0, first_epoch ? fmt::format("transformer >= 99% train accuracy at epoch {}", first_epoch)
                                         : fmt::format("transformer peaked at {:.1f}% in 50 epochs", 100 * best_acc));
  o.require(secs < 120.0, fmt::format("{:.1f}s < 120s", secs));

  std::vector<Label> labels;
  for (const auto& e : corpus) labels.push_back(e.label);
  const auto lr = TfidfLogistic::fit(texts_of(corpus), labels);
  const auto majority = MajorityBaseline::fit(labels);
  ConfusionMatrix cm_lr, cm_major;
  for (const auto& e : corpus) {
    cm_lr.add(e.label, lr.predict(e.task.text));
    cm_major.add(e.label, majority.predict());
  }
  const auto m_lr = metrics(cm_lr), m_major = metrics(cm_major);
  const auto m_tr = evaluate(result.best, data).metrics;
  o.require(m_lr.accuracy == 1.0, fmt::format("tfidf logistic train accuracy {:.1f}%", 100 * m_lr.accuracy));
  o.require(m_tr.f1 > m_major.f1 && m_lr.f1 > m_major.f1,
            fmt::format("macro-F1 transformer {:.4f}, logistic {:.4f} > majority {:.4f}", m_tr.f1, m_lr.f1, m_major.f1));
  return o;
}

Outcome metrics_oracle() {
  Outcome o;
  std::mt19937 gen(99);
  double worst = 0.0;
  bool bounded = true;
  for (int trial = 0; trial < 500; ++trial) {
    ConfusionMatrix cm;
    std::vector<std::pair<int, int>> pairs;
    const int scale = 1 + static_cast<int>(gen() % 20);
    for (int t = 0; t < 3; ++t)
      for (int p = 0; p < 3; ++p) {
        const int n = gen() % 4 == 0 ? 0 : static_cast<int>(gen() % scale);
        cm.counts[t][p] = static_cast<std::size_t>(n);
        for (int k = 0; k < n; ++k) pairs.emplace_back(t, p);
      }
    const auto r = metrics(cm);
    double mp = 0, mr = 0, mf = 0;
    for (int c = 0; c < 3; ++c) {
      // Brute force over the expanded (true, predicted) list.
      double tp = 0, pred = 0, act = 0;
      for (const auto& [t, p] : pairs) {
        tp += t == c && p == c;
        pred += p == c;
        act += t == c;
      }
      const double P = pred ? tp / pred : 0.0, R = act ? tp / act : 0.0;
      const double F = P + R > 0 ? 2 * P * R / (P + R) : 0.0;
      const auto& m = r.per_class[c];
      worst = std::max({worst, std::abs(m.precision - P), std::abs(m.recall - R), std::abs(m.f1 - F)});
      bounded = bounded && m.f1 >= std::min(m.precision, m.recall) - 1e-15 &&
                m.f1 <= std::max(m.precision, m.recall) + 1e-15;
      mp += P / 3, mr += R / 3, mf += F / 3;
    }
    worst = std::max({worst, std::abs(r.precision - mp), std::abs(r.recall - mr), std::abs(r.f1 - mf)});
  }
  o.require(worst <= 1e-12, fmt::format("500 matrices, max deviation {:.1e}", worst));
  o.require(bounded, "F1 between min and max of P and R");
  return o;
}

Outcome aggregation_fixture() {
  Outcome o;
  const auto dir = scratch("c6");
  const auto fx = synthetic::onet_aggregation({244, 602, 128});
  write_predictions(fx.predictions, dir / "predictions.csv");
  synthetic::write_occupations(fx.occupations, dir / "occupations.csv");
  synthetic::write_industries(fx.industries, dir / "industries.csv");

  Timer timer;
  const auto preds = read_predictions(dir / "predictions.csv");
  const auto occ = read_occupations(dir / "occupations.csv");
  const auto profiles = occupation_profiles(preds, occ);
  const auto s = summarize(profiles);
  const auto rankings = industry_profiles(profiles, occ, read_industries(dir / "industries.csv"));
  write_summary(summary_json(s, &rankings), dir / "summary.json");
  const double secs = timer.seconds();
  const auto json = read_bytes(dir / "summary.json");

  o.require(s.n_tasks == 19530 && s.n_occupations == 974, fmt::format("{} tasks, {} occupations", s.n_tasks, s.n_occupations));
  o.require(s.task_class_counts == std::array<std::size_t, 3>{6664, 10678, 2188},
            fmt::format("task totals {}/{}/{}", s.task_class_counts[0], s.task_class_counts[1], s.task_class_counts[2]));
  o.require(s.high_substitution.count == 244 && s.high_substitution.percent == "25.1%" &&
                json.find("\"25.1%\"") != std::string::npos,
            fmt::format("high substitution {} -> {}", s.high_substitution.count, s.high_substitution.percent));
  o.require(s.high_complementarity.count == 603,
            fmt::format("high complementarity count {} (target 603; {} + 603 + {} exceeds 974 exclusive flags)",
                        s.high_complementarity.count, s.high_substitution.count, s.safe.count));
  o.require(s.high_complementarity.percent == "61.8%",
            fmt::format("high complementarity renders {} (603/974 would render {})", s.high_complementarity.percent,
                        format_percent(603, 974)));
  o.require(s.safe.count == 128 && s.safe.percent == "13.1%", fmt::format("safe {} -> {}", s.safe.count, s.safe.percent));
  o.require(secs < 10.0, fmt::format("{:.2f}s < 10s", secs));
  fs::remove_all(dir);
  return o;
}

// Config for the end-to-end runs: the synthetic dataset with multiplier-2
// augmentation through the mock provider.
void write_pipeline_config(const fs::path& data, const fs::path& out) {
  std::ofstream(data / "config.json") << fmt::format(R"({{
  "paths": {{"tasks": "tasks.csv", "votes": "votes.csv", "occupations": "occupations.csv",
            "industries": "industries.csv", "output_dir": "{}"}},
  "source": "SYNTHETIC",
  "seed": 42,
  "split": {{"train": 0.8, "eval": 0.1, "test": 0.1}},
  "augmentation": {{"policy": "multiplier", "multiplier": 2, "provider": {{"kind": "mock"}}}},
  "train": {{"epochs": 15, "batch_size": 16, "learning_rate": 0.0002}}
}}
)",
                                                     out.string());
}

std::map<std::string, std::string> run_pipeline(const fs::path& data, const fs::path& out) {
  write_pipeline_config(data, out);
  const auto cfg = load_config(data / "config.json");
  fs::create_directories(cfg.paths.output_dir);
  pipeline::ingest(cfg);
  pipeline::split(cfg);
  auto provider = pipeline::make_provider(cfg, true);
  pipeline::augment(cfg, *provider);
  pipeline::build_vocab(cfg);
  pipeline::train(cfg);
  pipeline::evaluate(cfg);
  pipeline::predict(cfg);
  pipeline::aggregate(cfg);
  pipeline::report(cfg);
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(out)) files[e.path().filename().string()] = read_bytes(e.path());
  return files;
}

Outcome determinism() {
  Outcome o;
  const auto root = scratch("c7");
  synthetic::write_dataset(root / "data", synthetic::keyword_corpus());
  const auto a = run_pipeline(root / "data", root / "run_a");
  const auto b = run_pipeline(root / "data", root / "run_b");
  std::vector<std::string> differ;
  for (const auto& [name, bytes] : a)
    if (!b.count(name) || b.at(name) != bytes) differ.push_back(name);
  for (const auto& [name, bytes] : b)
    if (!a.count(name)) differ.push_back(name);
  o.require(a.size() >= 14, fmt::format("{} artifacts per run", a.size()));
  o.require(a.count("model.bin") && a.count("model.json") && a.count("summary.json"), "checkpoint and summary present");
  std::string list;
  for (const auto& d : differ) list += " " + d;
  o.require(differ.empty(), differ.empty() ? "all artifacts byte-identical" : "differing:" + list);
  fs::remove_all(root);
  return o;
}

Outcome split_augment_contracts() {
  Outcome o;
  std::mt19937_64 gen(8);
  int tolerance_violations = 0, coverage_violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ClassCounts counts;
    for (auto& c : counts) c = 1 + gen() % 120;
    const auto ex = synthetic::corpus(counts, gen());
    const auto s = stratified_split(ex, {0.8, 0.1, 0.1}, gen());
    std::map<std::string, int> cls;
    for (const auto& e : ex) cls[e.task.id] = index_of(e.label);
    std::set<std::string> seen;
    const std::array<const std::vector<std::string>*, 3> parts = {&s.train, &s.eval, &s.test};
    const double ratios[3] = {0.8, 0.1, 0.1};
    for (int k = 0; k < 3; ++k) {
      std::array<int, 3> n{};
      for (const auto& id : *parts[k]) {
        ++n[cls.at(id)];
        coverage_violations += !seen.insert(id).second;
      }
      for (int c = 0; c < 3; ++c)
        tolerance_violations += std::abs(n[c] - ratios[k] * static_cast<double>(counts[c])) > 1.0 + 1e-9;
    }
    coverage_violations += seen.size() != ex.size();
  }
  o.require(tolerance_violations == 0, fmt::format("100 corpora, {} cells outside +-1", tolerance_violations));
  o.require(coverage_violations == 0, "sets disjoint and covering");

  int unbalanced = 0, leaks = 0, label_mismatch = 0, children = 0;
  MockProvider mock(4);
  for (int trial = 0; trial < 10; ++trial) {
    ClassCounts counts;
    for (auto& c : counts) c = 3 + gen() % 40;
    const auto ex = synthetic::corpus(counts, gen());
    const auto s = stratified_split(ex, {0.8, 0.1, 0.1}, gen());
    const std::set<std::string> train(s.train.begin(), s.train.end());
    const std::set<std::string> held([&] {
      std::set<std::string> h(s.eval.begin(), s.eval.end());
      h.insert(s.test.begin(), s.test.end());
      return h;
    }());
    const auto train_part = select(ex, s.train);
    const auto before = class_counts(train_part);
    const auto out = apply_policy(ex, AugmentationPolicy::balanced(), mock, gen(), {}, &s);
    std::map<std::string, Label> label_of;
    for (const auto& e : ex) label_of[e.task.id] = e.label;
    ClassCounts after{};
    for (const auto& e : out) {
      if (e.origin == Origin::Augmented) {
        ++children;
        leaks += !train.count(*e.parent_id) || held.count(e.task.id);
        label_mismatch += label_of.at(*e.parent_id) != e.label;
      }
      if (e.origin == Origin::Augmented || train.count(e.task.id)) ++after[index_of(e.label)];
    }
    const auto m = *std::max_element(before.begin(), before.end());
    unbalanced += after != ClassCounts{m, m, m};
  }
  o.require(unbalanced == 0, fmt::format("Balanced equalizes to the pre-augmentation max in {}/10 corpora", 10 - unbalanced));
  o.require(leaks == 0, fmt::format("{} children, none from or into eval/test", children));
  o.require(label_mismatch == 0, "child labels equal parent labels");
  return o;
}

Outcome sweep_harness() {
  Outcome o;
  // 600 examples keeps one test error under the 0.05 tolerance at every
  // fraction. Early stopping off so every row trains the same length.
  ExperimentSettings s;
  s.train.epochs = 25;
  s.train.early_stop_patience = 25;
  s.seed = 42;
  MockProvider mock(42);
  const std::vector<std::string> values = {"0.8", "0.7", "0.6", "0.5", "0.4", "0.3", "0.2"};
  Timer timer;
  auto rows = run_sweep(SweepKind::TRAIN_FRACTION, values, synthetic::corpus({200, 200, 200}, 7), {}, s, mock);
  std::reverse(rows.begin(), rows.end());  // 0.8 first
  o.require(rows.size() == values.size(), fmt::format("{} rows in {:.1f}s", rows.size(), timer.seconds()));
  std::string trend;
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    trend += fmt::format("{}{}:{:.3f}", i ? " " : "", rows[i].value, rows[i].test.f1);
    if (i) monotone = monotone && rows[i].test.f1 <= rows[i - 1].test.f1 + 0.05;
  }
  o.require(monotone, "macro-F1 non-increasing within 0.05: " + trend);
  return o;
}

Outcome checkpoint_round_trip() {
  Outcome o;
  const auto dir = scratch("c10");
  ModelConfig mc;
  mc.vocab_size = 120;
  mc.max_len = 24;
  mc.init_std = 0.3;
  const auto params = init_params(mc, 77);
  save_checkpoint(params, 77, dir / "model");
  const auto loaded = load_checkpoint(dir / "model").params;
  std::mt19937 gen(10);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t len = 2 + gen() % (mc.max_len - 1);
    TokenSequence seq;
    seq.ids.assign(mc.max_len, Vocabulary::kPad);
    seq.mask.assign(mc.max_len, 0);
    for (std::size_t t = 0; t < len; ++t) {
      seq.ids[t] = t == 0 ? Vocabulary::kCls : t + 1 == len ? Vocabulary::kSep
                                                            : static_cast<int>(4 + gen() % (mc.vocab_size - 4));
      seq.mask[t] = 1;
    }
    seq.true_length = static_cast<int>(len);
    const auto a = forward(params, seq).logits, b = forward(loaded, seq).logits;
    mismatches += std::memcmp(a.data(), b.data(), sizeof(a)) != 0;
  }
  o.require(loaded == params, "parameters identical after reload");
  o.require(mismatches == 0, fmt::format("100 inputs, {} logit mismatches", mismatches));
  fs::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "attention invariants", attention_invariants},
      {3, "softmax and cross-entropy oracles", softmax_oracles},
      {4, "learning sanity", learning_sanity},
      {5, "metrics oracle", metrics_oracle},
      {6, "aggregation fixture exactness", aggregation_fixture},
      {7, "determinism", determinism},
      {8, "split and augment contracts", split_augment_contracts},
      {9, "sweep harness", sweep_harness},
      {10, "checkpoint round-trip", checkpoint_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    fmt::print("{} C{} {}: {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, detail);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
