// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "taskrisk/aggregate.hpp"
#include "taskrisk/corpus.hpp"
#include "taskrisk/csv.hpp"

namespace taskrisk::synthetic {

// Every sentence opens with a verb drawn from its class's list; the object
// and trailing context are shared across classes, so the verb alone decides
// the label.
inline constexpr std::array<std::array<const char*, 8>, kNumClasses> kVerbs = {{
    {"Record", "Compile", "Calculate", "Enter", "Sort", "Verify", "Tabulate", "Transcribe"},
    {"Advise on", "Negotiate", "Coordinate", "Mentor staff on", "Design", "Evaluate", "Plan", "Consult on"},
    {"Lift", "Climb to", "Repair", "Clean", "Assemble", "Install", "Carry", "Weld"},
}};

inline constexpr std::array<const char*, 10> kObjects = {
    "customer orders", "inventory data",  "safety reports",  "project budgets",   "equipment logs",
    "patient records", "shipping schedules", "supplier contracts", "training materials", "site drawings"};

inline constexpr std::array<const char*, 7> kContexts = {
    "for the department",      "at the main site",       "during weekly reviews", "using standard procedures",
    "for regional managers",   "before each shift",      "with the team"};

inline constexpr std::size_t kOccupations = 6;

inline std::string occupation_code(std::size_t i) { return fmt::format("99-{:04}.00", i + 1); }

// `counts[c]` sentences of class c, interleaved S, C, N while every class
// still has sentences left. Ids are `<prefix>-0001`, ...
inline std::vector<AnnotatedExample> corpus(const ClassCounts& counts, std::uint64_t seed,
                                            Source source = Source::SYNTHETIC, const std::string& prefix = "syn") {
  Rng rng(mix_seed(seed, 0x5e7));
  std::vector<AnnotatedExample> out;
  ClassCounts made{};
  std::size_t total = counts[0] + counts[1] + counts[2];
  while (out.size() < total) {
    for (int c = 0; c < kNumClasses; ++c) {
      if (made[c] == counts[c]) continue;
      const auto k = made[c]++;
      AnnotatedExample ex;
      ex.task.id = fmt::format("{}-{:04}", prefix, out.size() + 1);
      ex.task.text = fmt::format("{} {} {}.", kVerbs[c][k % kVerbs[c].size()], kObjects[rng.below(kObjects.size())],
                                 kContexts[rng.below(kContexts.size())]);
      ex.task.source = source;
      ex.task.occupation_code = occupation_code(out.size() % kOccupations);
      ex.label = label_from_index(c);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// The 60-sentence learning-sanity corpus: 20 per class.
inline std::vector<AnnotatedExample> keyword_corpus(std::uint64_t seed = 7) { return corpus({20, 20, 20}, seed); }

// O*NET class counts before and after augmentation.
inline constexpr ClassCounts kOnetOriginal = {1594, 2519, 947};
inline constexpr ClassCounts kOnetAugmented = {3188, 3023, 3030};

inline std::vector<AnnotatedExample> onet_original(std::uint64_t seed = 11) {
  return corpus(kOnetOriginal, seed, Source::ONET, "onet");
}

// Files in the layout `ingest` expects: tasks.csv, votes.csv,
// occupations.csv and industries.csv. Votes give the true label four or five
// times; `n_unresolved` extra tasks get split votes and no label.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<AnnotatedExample>& examples,
                          std::size_t n_unresolved = 3, std::uint64_t seed = 3) {
  Rng rng(mix_seed(seed, 0x407e));
  csv::Writer tasks({"id", "text", "occupation_code"});
  csv::Writer votes({"task_id", "v1", "v2", "v3", "v4", "v5"});
  auto vote_row = [&](const std::string& id, const std::array<Label, kVotesPerTask>& v) {
    std::vector<std::string> row{id};
    for (auto l : v) row.emplace_back(1, "SCN"[index_of(l)]);
    votes.row(row);
  };
  for (const auto& ex : examples) {
    tasks.row({ex.task.id, ex.task.text, ex.task.occupation_code.value_or("")});
    std::array<Label, kVotesPerTask> v;
    v.fill(ex.label);
    if (rng.below(2) == 1) v[rng.below(kVotesPerTask)] = label_from_index((index_of(ex.label) + 1) % kNumClasses);
    vote_row(ex.task.id, v);
  }
  for (std::size_t i = 0; i < n_unresolved; ++i) {
    const auto id = fmt::format("open-{:02}", i + 1);
    const auto c = static_cast<int>(i % kNumClasses);
    tasks.row({id, fmt::format("{} {} {}.", kVerbs[c][7], kObjects[i % kObjects.size()], kContexts[0]),
               occupation_code(i % kOccupations)});
    vote_row(id, {Label::Substitution, Label::Substitution, Label::Complementarity, Label::Complementarity,
                  Label::Negligibility});
  }
  tasks.save(dir / "tasks.csv");
  votes.save(dir / "votes.csv");

  csv::Writer occ({"code", "title", "industry_codes", "weight"});
  for (std::size_t i = 0; i < kOccupations; ++i)
    occ.row({occupation_code(i), fmt::format("Synthetic occupation {}", i + 1),
             i % 2 == 0 ? fmt::format("IND{}", i / 2 + 1) : fmt::format("IND{};IND{}", i / 2 + 1, (i / 2 + 1) % 3 + 1),
             "1"});
  occ.save(dir / "occupations.csv");
  csv::Writer ind({"code", "title"});
  for (int i = 1; i <= 3; ++i) ind.row({fmt::format("IND{}", i), fmt::format("Synthetic industry {}", i)});
  ind.save(dir / "industries.csv");
}

// ---------------------------------------------------------------------------
// O*NET-shaped aggregation fixture

struct AggregationFixture {
  std::vector<PredictionRecord> predictions;
  OccupationMap occupations;
  IndustryMap industries;
};

inline constexpr std::size_t kFixtureOccupations = 974;
inline constexpr std::size_t kFixtureTasks = 19530;
inline constexpr ClassCounts kFixtureTaskTotals = {6664, 10678, 2188};
inline constexpr std::size_t kFixtureIndustries = 20;

// 974 occupations with 20 tasks each, except the last 50 which carry 21.
// `majority[c]` occupations receive a strict majority (floor(n/2)+1 tasks) of
// class c; the remaining slots are dealt to whichever class has the most
// tasks still owed, so class totals land exactly on kFixtureTaskTotals.
inline AggregationFixture onet_aggregation(const ClassCounts& majority) {
  if (majority[0] + majority[1] + majority[2] != kFixtureOccupations)
    throw Error(ErrorCode::InvalidArgument, "majority counts must cover all 974 occupations");
  AggregationFixture f;
  for (std::size_t i = 0; i < kFixtureIndustries; ++i)
    f.industries.emplace(fmt::format("N{:02}", i + 1), fmt::format("Industry {}", i + 1));

  std::array<long, kNumClasses> owed{};
  // Every occupation has 20 or 21 tasks, so its majority block is 11.
  for (int c = 0; c < kNumClasses; ++c)
    owed[c] = static_cast<long>(kFixtureTaskTotals[c]) - 11 * static_cast<long>(majority[c]);
  std::size_t task = 0;
  for (std::size_t o = 0; o < kFixtureOccupations; ++o) {
    const auto code = fmt::format("{:02}-{:04}.00", 11 + o % 43, o + 1);
    Occupation occ;
    occ.title = fmt::format("Occupation {}", o + 1);
    occ.industry_codes.push_back(fmt::format("N{:02}", o % kFixtureIndustries + 1));
    if (o % 7 == 0) occ.industry_codes.push_back(fmt::format("N{:02}", (o / 7) % kFixtureIndustries + 1));
    if (occ.industry_codes.size() == 2 && occ.industry_codes[0] == occ.industry_codes[1]) occ.industry_codes.pop_back();
    f.occupations.emplace(code, occ);

    const std::size_t n = o + 50 >= kFixtureOccupations ? 21 : 20;
    const int major = o < majority[0] ? 0 : (o < majority[0] + majority[1] ? 1 : 2);
    std::vector<int> labels(n / 2 + 1, major);
    while (labels.size() < n) {
      int best = 0;
      for (int c = 1; c < kNumClasses; ++c)
        if (owed[c] > owed[best]) best = c;
      labels.push_back(best);
      --owed[best];
    }
    for (int l : labels) {
      PredictionRecord p;
      p.task_id = fmt::format("T{:05}", ++task);
      p.label = label_from_index(l);
      p.probabilities = {0.1, 0.1, 0.1};
      p.probabilities[l] = 0.8;
      p.occupation_code = code;
      f.predictions.push_back(std::move(p));
    }
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (owed[c] != 0) throw Error(ErrorCode::InvalidArgument, "majority counts cannot meet the task totals");
  return f;
}

inline void write_occupations(const OccupationMap& occupations, const std::filesystem::path& path) {
  csv::Writer w({"code", "title", "industry_codes", "weight"});
  for (const auto& [code, occ] : occupations) {
    std::string inds;
    for (const auto& i : occ.industry_codes) inds += (inds.empty() ? "" : ";") + i;
    w.row({code, occ.title, inds, fmt::format("{}", occ.weight)});
  }
  w.save(path);
}

inline void write_industries(const IndustryMap& industries, const std::filesystem::path& path) {
  csv::Writer w({"code", "title"});
  for (const auto& [code, title] : industries) w.row({code, title});
  w.save(path);
}

}  // namespace taskrisk::synthetic
