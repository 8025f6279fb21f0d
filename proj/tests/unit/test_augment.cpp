// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "taskrisk/augment.hpp"
#include "taskrisk/http_provider.hpp"
#include "taskrisk/synthetic.hpp"
#include "test_support.hpp"

using namespace taskrisk;

namespace {

const std::string kSample =
    "Generate reports utilizing visual aids such as charts, graphs, and written descriptions by analyzing and "
    "documenting test outcomes.";

AnnotatedExample example(const std::string& id, const std::string& text, Label l) {
  AnnotatedExample e;
  e.task.id = id;
  e.task.text = text;
  e.label = l;
  return e;
}

// Parent map from the result, checked without the library.
void expect_lineage(const std::vector<AnnotatedExample>& out) {
  std::map<std::string, const AnnotatedExample*> by_id;
  for (const auto& e : out) by_id[e.task.id] = &e;
  for (const auto& e : out) {
    if (e.origin == Origin::Human) {
      EXPECT_FALSE(e.parent_id.has_value());
      continue;
    }
    ASSERT_TRUE(e.parent_id.has_value()) << e.task.id;
    const auto it = by_id.find(*e.parent_id);
    ASSERT_NE(it, by_id.end()) << *e.parent_id;
    EXPECT_EQ(it->second->origin, Origin::Human);
    EXPECT_EQ(it->second->label, e.label) << e.task.id;
  }
}

}  // namespace

TEST(Paraphrase, SampleSentenceFirstVariant) {
  MockProvider mock(42);
  const auto v = paraphrase({kSample, 1, 0.7}, mock);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rfind("Create reports that incorporate visual elements", 0), 0u) << v[0];
}

TEST(Paraphrase, ThreeDistinctVariants) {
  MockProvider mock(42);
  const auto v = paraphrase({kSample, 3, 0.7}, mock);
  ASSERT_EQ(v.size(), 3u);
  std::set<std::string> distinct(v.begin(), v.end());
  EXPECT_EQ(distinct.size(), 3u);
  for (const auto& s : v) EXPECT_NE(s, kSample);
}

TEST(Paraphrase, MockIsDeterministicAndPrefixStable) {
  MockProvider a(5), b(5);
  const auto x = paraphrase({kSample, 4, 0.7}, a);
  EXPECT_EQ(x, paraphrase({kSample, 4, 0.7}, b));
  EXPECT_EQ(x, paraphrase({kSample, 4, 0.7}, a));
  const auto y = paraphrase({kSample, 5, 0.7}, a);
  ASSERT_EQ(y.size(), 5u);
  EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
}

TEST(Paraphrase, RequestValidation) {
  MockProvider mock;
  EXPECT_TASKRISK_ERROR(paraphrase({"  ", 1, 0.7}, mock), InvalidArgument);
  EXPECT_TASKRISK_ERROR(paraphrase({"x", 0, 0.7}, mock), InvalidArgument);
  EXPECT_TASKRISK_ERROR(paraphrase({"x", 1, 2.5}, mock), InvalidArgument);
}

TEST(Validate, HandComputedCosine) {
  const auto v = validate_paraphrase("record test data", "record the data", 0.5);
  EXPECT_NEAR(v.similarity, 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(v.accepted);
}

TEST(Validate, IdenticalAndDisjoint) {
  const auto same = validate_paraphrase("Inspect trucks.", "Inspect trucks.", 0.5);
  EXPECT_DOUBLE_EQ(same.similarity, 1.0);
  EXPECT_FALSE(same.accepted);
  const auto disjoint = validate_paraphrase("load trucks", "teach children", 0.5);
  EXPECT_DOUBLE_EQ(disjoint.similarity, 0.0);
  EXPECT_FALSE(disjoint.accepted);
}

TEST(Policy, BalancedOnSmallCorpus) {
  std::vector<AnnotatedExample> ex = {
      example("s1", "Record test data daily.", Label::Substitution),
      example("s2", "Prepare routine invoices.", Label::Substitution),
      example("s3", "Monitor equipment status.", Label::Substitution),
      example("s4", "Load trucks with cargo.", Label::Substitution),
      example("c1", "Advise clients on program choices.", Label::Complementarity),
      example("c2", "Coordinate staff schedule changes.", Label::Complementarity),
      example("n1", "Teach children to swim.", Label::Negligibility),
      example("n2", "Assist patients with routine procedures.", Label::Negligibility),
  };
  MockProvider mock(1);
  const auto out = apply_policy(ex, AugmentationPolicy::balanced(), mock, 7);
  EXPECT_EQ(class_counts(out), (ClassCounts{4, 4, 4}));
  for (std::size_t i = 0; i < ex.size(); ++i) EXPECT_EQ(out[i].task.id, ex[i].task.id);
  int children = 0;
  for (const auto& e : out) {
    if (e.origin != Origin::Augmented) continue;
    ++children;
    EXPECT_NE(e.label, Label::Substitution);
    EXPECT_EQ(e.parent_id->at(0), e.label == Label::Complementarity ? 'c' : 'n');
  }
  EXPECT_EQ(children, 4);
  expect_lineage(out);
}

TEST(Policy, OriginalIsIdentity) {
  const auto ex = synthetic::keyword_corpus();
  MockProvider mock;
  const auto out = apply_policy(ex, AugmentationPolicy::original(), mock, 1);
  ASSERT_EQ(out.size(), ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) EXPECT_EQ(out[i].task.text, ex[i].task.text);
}

TEST(Policy, MultiplierTwo) {
  const auto ex = synthetic::corpus({10, 10, 10}, 3);
  MockProvider mock(2);
  const auto out = apply_policy(ex, AugmentationPolicy::times(2.0), mock, 3);
  EXPECT_EQ(class_counts(out), (ClassCounts{20, 20, 20}));
  expect_lineage(out);
}

TEST(Policy, MultiplierRoundsUp) {
  const auto ex = synthetic::corpus({3, 5, 2}, 3);
  MockProvider mock(2);
  const auto out = apply_policy(ex, AugmentationPolicy::times(1.5), mock, 3);
  EXPECT_EQ(class_counts(out), (ClassCounts{5, 8, 3}));
}

TEST(Policy, BalancedTargetsOnTableOneCounts) {
  const auto t = detail::policy_targets(AugmentationPolicy::balanced(), synthetic::kOnetOriginal);
  EXPECT_EQ(t, (ClassCounts{2519, 2519, 2519}));
}

TEST(Policy, TableOneAugmentedCountsViaTargets) {
  const auto ex = synthetic::onet_original();
  MockProvider mock(11);
  const auto out = apply_policy(ex, AugmentationPolicy::target_counts(synthetic::kOnetAugmented), mock, 11);
  EXPECT_EQ(class_counts(out), (ClassCounts{3188, 3023, 3030}));
  std::set<std::string> ids;
  for (const auto& e : out) EXPECT_TRUE(ids.insert(e.task.id).second) << e.task.id;
}

TEST(Policy, InvalidPolicies) {
  const auto ex = synthetic::keyword_corpus();
  MockProvider mock;
  EXPECT_TASKRISK_ERROR(apply_policy(ex, AugmentationPolicy::times(1.7), mock, 1), InvalidArgument);
  EXPECT_TASKRISK_ERROR(apply_policy(ex, AugmentationPolicy::target_counts({1, 1, 1}), mock, 1), InvalidArgument);
}

TEST(Policy, SplitRestrictsParentsToTrain) {
  const auto ex = synthetic::corpus({12, 6, 6}, 5);
  const auto split = stratified_split(ex, {0.5, 0.25, 0.25}, 5);
  MockProvider mock(5);
  const auto out = apply_policy(ex, AugmentationPolicy::balanced(), mock, 5, {}, &split);
  const std::set<std::string> train(split.train.begin(), split.train.end());
  ClassCounts train_counts{};
  for (const auto& e : out) {
    if (e.origin == Origin::Augmented) {
      EXPECT_TRUE(train.count(*e.parent_id)) << *e.parent_id;
      EXPECT_FALSE(std::count(split.eval.begin(), split.eval.end(), e.task.id));
      EXPECT_FALSE(std::count(split.test.begin(), split.test.end(), e.task.id));
    }
    if (e.origin == Origin::Augmented || train.count(e.task.id)) ++train_counts[index_of(e.label)];
  }
  EXPECT_EQ(train_counts, (ClassCounts{6, 6, 6}));
  expect_lineage(out);
}

namespace {

// Returns a fixed single variant, so multi-child quotas cannot be met.
class StingyProvider : public ProviderClient {
 public:
  std::vector<std::string> complete(const ParaphraseRequest& req) override { return {req.source_text + " again"}; }
};

}  // namespace

TEST(Policy, InsufficientVariants) {
  const auto ex = synthetic::corpus({1, 4, 1}, 5);
  StingyProvider p;
  EXPECT_TASKRISK_ERROR(apply_policy(ex, AugmentationPolicy::balanced(), p, 1), InsufficientVariants);
}

TEST(Augmented, FileRoundTrip) {
  taskrisk::testing::TempDir dir;
  const auto ex = synthetic::corpus({2, 2, 2}, 5);
  MockProvider mock(5);
  const auto out = apply_policy(ex, AugmentationPolicy::times(2.0), mock, 5);
  write_augmented(out, dir / "aug.csv");
  const auto back = read_augmented(dir / "aug.csv");
  ASSERT_EQ(back.size(), out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(back[i].task.id, out[i].task.id);
    EXPECT_EQ(back[i].task.text, out[i].task.text);
    EXPECT_EQ(back[i].label, out[i].label);
    EXPECT_EQ(back[i].parent_id, out[i].parent_id);
  }
}

TEST(HttpProvider, ParsesVariantsAndSendsContract) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_body;
  server.Post("/paraphrase", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    if (hits == 1) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"variants": ["one", "two"]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpProvider p(fmt::format("http://127.0.0.1:{}/paraphrase", port), "secret", 5.0, 2);
  const auto v = p.complete({"Inspect trucks.", 2, 0.5});
  server.stop();
  th.join();
  EXPECT_EQ(v, (std::vector<std::string>{"one", "two"}));
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(seen_auth, "Bearer secret");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["text"], "Inspect trucks.");
  EXPECT_EQ(body["n"], 2);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.5);
}

TEST(HttpProvider, AuthFailureIsNotRetried) {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/p", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpProvider p(fmt::format("http://127.0.0.1:{}/p", port), "", 5.0, 3);
  EXPECT_TASKRISK_ERROR(p.complete({"Inspect trucks.", 1, 0.5}), ProviderUnavailable);
  server.stop();
  th.join();
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpProvider, MalformedPayloads) {
  EXPECT_TASKRISK_ERROR(HttpProvider::parse_variants("not json"), MalformedResponse);
  EXPECT_TASKRISK_ERROR(HttpProvider::parse_variants(R"({"text": "x"})"), MalformedResponse);
  EXPECT_TASKRISK_ERROR(HttpProvider::parse_variants(R"({"variants": [1]})"), MalformedResponse);
}
