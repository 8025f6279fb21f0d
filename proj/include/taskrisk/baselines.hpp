// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "taskrisk/core.hpp"
#include "taskrisk/model.hpp"
#include "taskrisk/tokenizer.hpp"

namespace taskrisk {

// Sorted (column, value) pairs.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

// Lowercased unigrams; pure-punctuation tokens are dropped.
inline std::vector<std::string> unigrams(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& w : pre_tokenize(text)) {
    if (w.size() == 1 && utf8::is_punct(w[0])) continue;
    out.push_back(utf8::encode(w));
  }
  return out;
}

class TfidfVectorizer {
 public:
  static TfidfVectorizer fit(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(ErrorCode::EmptyCorpus, "tf-idf needs at least one training text");
    std::map<std::string, std::size_t> df;
    for (const auto& t : texts) {
      auto words = unigrams(t);
      std::sort(words.begin(), words.end());
      words.erase(std::unique(words.begin(), words.end()), words.end());
      for (auto& w : words) ++df[w];
    }
    TfidfVectorizer v;
    v.n_docs_ = texts.size();
    const double n = static_cast<double>(texts.size());
    for (const auto& [term, count] : df) {
      v.index_.emplace(term, v.idf_.size());
      v.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return v;
  }

  std::size_t size() const { return idf_.size(); }
  std::size_t n_docs() const { return n_docs_; }

  std::optional<double> idf(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return idf_[it->second];
  }

  // Raw term counts times idf, L2-normalized. Unseen terms are ignored.
  SparseVector transform(std::string_view text) const {
    std::map<std::size_t, double> tf;
    for (const auto& w : unigrams(text)) {
      auto it = index_.find(w);
      if (it != index_.end()) tf[it->second] += 1.0;
    }
    SparseVector out;
    double norm = 0.0;
    for (const auto& [col, count] : tf) {
      const double v = count * idf_[col];
      out.emplace_back(col, v);
      norm += v * v;
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (auto& [col, v] : out) v /= norm;
    }
    return out;
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
};

struct LogisticConfig {
  double l2_lambda = 0.0;
  double learning_rate = 1.0;  // initial step; halved whenever a step would raise the loss
  int max_iterations = 5000;
  double gradient_tolerance = 1e-6;
};

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(std::size_t n_features, double l2) : w_(n_features, 3), l2_(l2) {}

  std::array<double, kNumClasses> predict_proba(const SparseVector& x) const {
    std::array<double, kNumClasses> z{};
    for (int c = 0; c < kNumClasses; ++c) z[c] = b_[c];
    for (const auto& [col, v] : x)
      for (int c = 0; c < kNumClasses; ++c) z[c] += v * w_(col, c);
    return softmax3(z);
  }

  Label predict(const SparseVector& x) const {
    const auto p = predict_proba(x);
    return label_from_index(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }

  const Matrix& weights() const { return w_; }
  const std::array<double, kNumClasses>& bias() const { return b_; }
  double l2_lambda() const { return l2_; }
  // Regularized training loss after every accepted iteration.
  const std::vector<double>& loss_history() const { return history_; }
  int iterations() const { return iterations_; }

 private:
  friend LogisticModel fit_logistic(const std::vector<SparseVector>&, const std::vector<Label>&,
                                    const LogisticConfig&, std::size_t);
  Matrix w_;
  std::array<double, kNumClasses> b_{};
  double l2_ = 0.0;
  std::vector<double> history_;
  int iterations_ = 0;
};

namespace detail {

inline double logistic_loss(const LogisticModel& m, const std::vector<SparseVector>& x, const std::vector<Label>& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) loss += cross_entropy(m.predict_proba(x[i]), y[i]);
  loss /= static_cast<double>(x.size());
  return loss + 0.5 * m.l2_lambda() * squared_norm(m.weights());
}

}  // namespace detail

// Full-batch gradient descent on mean multinomial cross-entropy plus
// (lambda/2)|W|^2. The bias is not regularized.
inline LogisticModel fit_logistic(const std::vector<SparseVector>& x, const std::vector<Label>& y,
                                  const LogisticConfig& cfg, std::size_t n_features) {
  if (x.size() != y.size() || x.empty()) throw Error(ErrorCode::InvalidArgument, "logistic: empty or ragged data");
  if (cfg.l2_lambda < 0.0 || !(cfg.learning_rate > 0.0) || cfg.max_iterations < 0)
    throw Error(ErrorCode::InvalidArgument, "logistic: bad config");
  std::array<bool, kNumClasses> seen{};
  for (auto l : y) seen[index_of(l)] = true;
  for (int c = 0; c < kNumClasses; ++c)
    if (!seen[c])
      throw Error(ErrorCode::MissingClass, "no training example of class " + std::string(label_name(label_from_index(c))));

  LogisticModel m(n_features, cfg.l2_lambda);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double loss = detail::logistic_loss(m, x, y);
  m.history_.push_back(loss);
  double step = cfg.learning_rate;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Matrix gw(n_features, kNumClasses);
    std::array<double, kNumClasses> gb{};
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto p = m.predict_proba(x[i]);
      p[index_of(y[i])] -= 1.0;
      for (int c = 0; c < kNumClasses; ++c) gb[c] += inv_n * p[c];
      for (const auto& [col, v] : x[i])
        for (int c = 0; c < kNumClasses; ++c) gw(col, c) += inv_n * v * p[c];
    }
    add_inplace(gw, m.w_, cfg.l2_lambda);
    double gnorm = squared_norm(gw);
    for (double g : gb) gnorm += g * g;
    if (std::sqrt(gnorm) < cfg.gradient_tolerance) break;

    bool accepted = false;
    for (int halvings = 0; halvings < 60 && !accepted; ++halvings) {
      LogisticModel trial = m;
      add_inplace(trial.w_, gw, -step);
      for (int c = 0; c < kNumClasses; ++c) trial.b_[c] -= step * gb[c];
      const double trial_loss = detail::logistic_loss(trial, x, y);
      if (trial_loss <= loss) {
        m.w_ = std::move(trial.w_);
        m.b_ = trial.b_;
        loss = trial_loss;
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;  // no descent possible at machine precision
    m.history_.push_back(loss);
    m.iterations_ = it + 1;
  }
  if (!m.w_.all_finite()) throw Error(ErrorCode::NonFiniteGradient, "logistic weights");
  return m;
}

struct TfidfLogistic {
  TfidfVectorizer vectorizer;
  LogisticModel model;

  static TfidfLogistic fit(const std::vector<std::string>& texts, const std::vector<Label>& labels,
                           const LogisticConfig& cfg = {}) {
    TfidfLogistic out;
    out.vectorizer = TfidfVectorizer::fit(texts);
    std::vector<SparseVector> x;
    x.reserve(texts.size());
    for (const auto& t : texts) x.push_back(out.vectorizer.transform(t));
    out.model = fit_logistic(x, labels, cfg, out.vectorizer.size());
    return out;
  }

  Label predict(std::string_view text) const { return model.predict(vectorizer.transform(text)); }
};

// Always predicts the most frequent training class; ties go to the earlier
// class in S, C, N order.
struct MajorityBaseline {
  Label label = Label::Substitution;

  static MajorityBaseline fit(const std::vector<Label>& labels) {
    std::array<std::size_t, kNumClasses> n{};
    for (auto l : labels) ++n[index_of(l)];
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (n[c] > n[best]) best = c;
    return {label_from_index(best)};
  }

  Label predict(std::string_view = {}) const { return label; }
};

}  // namespace taskrisk
