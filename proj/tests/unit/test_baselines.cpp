// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#include <cmath>

#include <gtest/gtest.h>

#include "taskrisk/baselines.hpp"
#include "taskrisk/experiment.hpp"
#include "taskrisk/synthetic.hpp"
#include "test_support.hpp"

using namespace taskrisk;

TEST(Tfidf, HandValues) {
  const auto v = TfidfVectorizer::fit({"a b", "a"});
  EXPECT_EQ(v.n_docs(), 2u);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(*v.idf("a"), 1.0);
  EXPECT_NEAR(*v.idf("b"), std::log(1.5) + 1.0, 1e-15);
  EXPECT_NEAR(*v.idf("b"), 1.405, 5e-4);
  EXPECT_FALSE(v.idf("c").has_value());
}

TEST(Tfidf, TransformExamples) {
  const auto v = TfidfVectorizer::fit({"a b", "a"});
  EXPECT_TRUE(v.transform("zzz").empty());
  const auto a = v.transform("a");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_DOUBLE_EQ(a[0].second, 1.0);
  const auto ab = v.transform("A, b b");
  ASSERT_EQ(ab.size(), 2u);
  const double wa = 1.0, wb = 2.0 * (std::log(1.5) + 1.0), n = std::hypot(wa, wb);
  double norm = 0;
  for (const auto& kv : ab) norm += kv.second * kv.second;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_NEAR(std::min(ab[0].second, ab[1].second), wa / n, 1e-12);
  EXPECT_NEAR(std::max(ab[0].second, ab[1].second), wb / n, 1e-12);
  EXPECT_TASKRISK_ERROR(TfidfVectorizer::fit({}), EmptyCorpus);
}

TEST(Logistic, SeparableToySet) {
  // Class k is marked by feature k; class 2 has neither feature.
  const std::vector<SparseVector> x = {{{0, 1.0}}, {{0, 0.8}}, {{1, 1.0}}, {{1, 0.9}}, {}, {}};
  const std::vector<Label> y = {Label::Substitution, Label::Substitution, Label::Complementarity,
                                Label::Complementarity, Label::Negligibility, Label::Negligibility};
  const auto m = fit_logistic(x, y, {}, 2);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(m.predict(x[i]), y[i]) << i;
  const auto& h = m.loss_history();
  ASSERT_FALSE(h.empty());
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
}

TEST(Logistic, ZeroInputGivesSoftmaxOfBias) {
  const std::vector<SparseVector> x = {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{2, 0.5}}};
  const std::vector<Label> y = {Label::Substitution, Label::Complementarity, Label::Negligibility,
                                Label::Negligibility};
  const auto m = fit_logistic(x, y, {}, 3);
  const auto p = m.predict_proba({});
  const auto b = m.bias();
  const double z = std::exp(b[0]) + std::exp(b[1]) + std::exp(b[2]);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(p[c], std::exp(b[c]) / z, 1e-12);
}

TEST(Logistic, StrongRegularizationShrinksWeights) {
  const std::vector<SparseVector> x = {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{0, 0.7}, {2, 0.7}}};
  const std::vector<Label> y = {Label::Substitution, Label::Complementarity, Label::Negligibility,
                                Label::Substitution};
  LogisticConfig loose, tight;
  tight.l2_lambda = 1e6;
  auto norm = [](const LogisticModel& m) { return std::sqrt(squared_norm(m.weights())); };
  const auto a = fit_logistic(x, y, loose, 3), b = fit_logistic(x, y, tight, 3);
  EXPECT_LT(norm(b), 1e-2);
  EXPECT_GT(norm(a), norm(b));
}

TEST(Logistic, MissingClass) {
  const std::vector<SparseVector> x = {{{0, 1.0}}, {{1, 1.0}}};
  EXPECT_TASKRISK_ERROR(fit_logistic(x, {Label::Substitution, Label::Complementarity}, {}, 2), MissingClass);
}

TEST(TfidfLogistic, KeywordCorpusIsSeparable) {
  const auto ex = synthetic::keyword_corpus();
  std::vector<Label> y;
  for (const auto& e : ex) y.push_back(e.label);
  const auto m = TfidfLogistic::fit(texts_of(ex), y);
  for (const auto& e : ex) EXPECT_EQ(m.predict(e.task.text), e.label) << e.task.text;
}

TEST(Majority, MostFrequentAndTieBreak) {
  using L = Label;
  EXPECT_EQ(MajorityBaseline::fit({L::Substitution, L::Substitution, L::Substitution, L::Substitution,
                                   L::Substitution, L::Complementarity, L::Complementarity,
                                   L::Complementarity, L::Negligibility, L::Negligibility})
                .predict(),
            L::Substitution);
  EXPECT_EQ(MajorityBaseline::fit({L::Complementarity, L::Substitution, L::Complementarity, L::Substitution,
                                   L::Substitution, L::Complementarity, L::Negligibility})
                .predict("anything"),
            L::Substitution);
  EXPECT_EQ(MajorityBaseline::fit({L::Negligibility, L::Complementarity, L::Negligibility}).predict(),
            L::Negligibility);
}
