// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "taskrisk/core.hpp"
#include "taskrisk/csv.hpp"

namespace taskrisk {

// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& r : counts)
      for (auto v : r) n += v;
    return n;
  }

  void add(Label truth, Label predicted) { ++counts[index_of(truth)][index_of(predicted)]; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const std::vector<std::pair<Label, Label>>& pairs) {
  ConfusionMatrix cm;
  for (const auto& [t, p] : pairs) cm.add(t, p);
  return cm;
}

enum class Averaging { Macro, Weighted };

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  // Set when a ratio was 0/0 and reported as 0.
  bool degenerate = false;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double precision = 0.0;  // averaged per `averaging`
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  Averaging averaging = Averaging::Macro;
};

// Per-class one-vs-rest precision, recall and F1, averaged across the three
// classes. Any 0/0 ratio is reported as 0 and flags the class as degenerate.
inline MetricsReport metrics(const ConfusionMatrix& cm, Averaging averaging = Averaging::Macro) {
  MetricsReport r;
  r.averaging = averaging;
  r.n = cm.total();
  std::size_t correct = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t tp = cm.counts[c][c], predicted = 0, actual = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      predicted += cm.counts[k][c];
      actual += cm.counts[c][k];
    }
    correct += tp;
    auto& m = r.per_class[c];
    m.support = actual;
    if (predicted) m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    else m.degenerate = true;
    if (actual) m.recall = static_cast<double>(tp) / static_cast<double>(actual);
    else m.degenerate = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    const double w = averaging == Averaging::Macro
                         ? 1.0 / kNumClasses
                         : (r.n ? static_cast<double>(m.support) / static_cast<double>(r.n) : 0.0);
    r.precision += w * m.precision;
    r.recall += w * m.recall;
    r.f1 += w * m.f1;
  }
  if (r.n) r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  return r;
}

// metrics.csv rows for one (model, dataset, split) evaluation.
inline void append_metrics_rows(csv::Writer& w, const std::string& model, const std::string& dataset,
                                const std::string& split, const MetricsReport& r) {
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    w.row({model, dataset, split, std::string(label_name(label_from_index(c))),
           fmt::format("{:.6f}", m.precision), fmt::format("{:.6f}", m.recall), fmt::format("{:.6f}", m.f1)});
  }
  w.row({model, dataset, split, r.averaging == Averaging::Macro ? "macro" : "weighted",
         fmt::format("{:.6f}", r.precision), fmt::format("{:.6f}", r.recall), fmt::format("{:.6f}", r.f1)});
}

inline csv::Writer metrics_writer() {
  return csv::Writer({"model", "dataset", "split", "class", "precision", "recall", "f1"});
}

inline std::string format_table(const std::string& title, const MetricsReport& r) {
  std::string out = fmt::format("{} (n={}, accuracy={:.4f})\n", title, r.n, r.accuracy);
  out += fmt::format("  {:<16} {:>9} {:>9} {:>9} {:>8}\n", "class", "precision", "recall", "f1", "support");
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    out += fmt::format("  {:<16} {:>9.4f} {:>9.4f} {:>9.4f} {:>8}{}\n", label_name(label_from_index(c)),
                       m.precision, m.recall, m.f1, m.support, m.degenerate ? "  (0/0)" : "");
  }
  out += fmt::format("  {:<16} {:>9.4f} {:>9.4f} {:>9.4f}\n",
                     r.averaging == Averaging::Macro ? "macro" : "weighted", r.precision, r.recall, r.f1);
  return out;
}

}  // namespace taskrisk
