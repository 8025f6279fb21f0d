// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "taskrisk/core.hpp"
#include "taskrisk/csv.hpp"

namespace taskrisk {

enum class Source { ONET, ESCO, AULMI, SYNTHETIC };

inline std::string_view source_name(Source s) {
  switch (s) {
    case Source::ONET: return "ONET";
    case Source::ESCO: return "ESCO";
    case Source::AULMI: return "AULMI";
    case Source::SYNTHETIC: return "SYNTHETIC";
  }
  return "?";
}

inline std::optional<Source> parse_source(std::string_view s) {
  if (s == "ONET") return Source::ONET;
  if (s == "ESCO") return Source::ESCO;
  if (s == "AULMI") return Source::AULMI;
  if (s == "SYNTHETIC") return Source::SYNTHETIC;
  return std::nullopt;
}

struct TaskStatement {
  std::string id;
  std::string text;
  Source source = Source::SYNTHETIC;
  std::optional<std::string> occupation_code;
};

inline constexpr int kVotesPerTask = 5;

struct VoteRecord {
  std::string task_id;
  std::array<Label, kVotesPerTask> votes{};
};

enum class Origin { Human, Augmented };

inline std::string_view origin_name(Origin o) {
  return o == Origin::Human ? "HUMAN" : "AUGMENTED";
}

struct AnnotatedExample {
  TaskStatement task;
  Label label = Label::Substitution;
  Origin origin = Origin::Human;
  std::optional<std::string> parent_id;  // set iff origin == Augmented
};

// A corpus row after vote resolution. Tasks without consensus keep an empty
// label so they still take part in inference.
struct CorpusEntry {
  TaskStatement task;
  std::optional<Label> label;
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

struct SplitRatios {
  double train = 0.8;
  double eval = 0.1;
  double test = 0.1;
};

enum class SplitPart { Train, Eval, Test };

inline std::string_view split_part_name(SplitPart p) {
  switch (p) {
    case SplitPart::Train: return "train";
    case SplitPart::Eval: return "eval";
    case SplitPart::Test: return "test";
  }
  return "?";
}

struct SplitAssignment {
  // Ids in the order they appear in the input example list.
  std::vector<std::string> train;
  std::vector<std::string> eval;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::unordered_map<std::string, SplitPart> index() const {
    std::unordered_map<std::string, SplitPart> m;
    for (const auto& id : train) m.emplace(id, SplitPart::Train);
    for (const auto& id : eval) m.emplace(id, SplitPart::Eval);
    for (const auto& id : test) m.emplace(id, SplitPart::Test);
    return m;
  }
};

struct Occupation {
  std::string title;
  std::vector<std::string> industry_codes;
  double weight = 1.0;  // accepted but not used by the unweighted rollups
};

using OccupationMap = std::map<std::string, Occupation>;
using IndustryMap = std::map<std::string, std::string>;  // code -> title

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {
inline std::string row_tag(std::size_t data_row) {
  return "row " + std::to_string(data_row);
}
}  // namespace detail

// Reads `id,text,occupation_code`. Rows are numbered from 1 (first data row).
inline std::vector<TaskStatement> parse_corpus(const csv::Table& table, Source source) {
  const auto id_col = table.column("id", "tasks");
  const auto text_col = table.column("text", "tasks");
  const auto occ_col = table.column("occupation_code", "tasks");

  std::vector<TaskStatement> out;
  out.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    TaskStatement t;
    t.id = trim(row[id_col]);
    t.text = trim(row[text_col]);
    t.source = source;
    if (auto occ = trim(row[occ_col]); !occ.empty()) t.occupation_code = std::move(occ);
    if (t.id.empty())
      throw Error(ErrorCode::InvalidArgument, detail::row_tag(r + 1) + ": empty id");
    if (t.text.empty())
      throw Error(ErrorCode::EmptyText, detail::row_tag(r + 1) + " (id \"" + t.id + "\")");
    if (!seen.insert(t.id).second)
      throw Error(ErrorCode::DuplicateId,
                  "\"" + t.id + "\" repeated at " + detail::row_tag(r + 1));
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TaskStatement> ingest_corpus(const std::filesystem::path& path, Source source) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::Io, "no such file: " + path.string());
  return parse_corpus(csv::read(path), source);
}

inline std::vector<VoteRecord> read_votes(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto id_col = table.column("task_id", "votes");
  std::array<std::size_t, kVotesPerTask> vote_cols{};
  for (int v = 0; v < kVotesPerTask; ++v)
    vote_cols[v] = table.column("v" + std::to_string(v + 1), "votes");

  std::vector<VoteRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    VoteRecord rec;
    rec.task_id = trim(table.rows[r][id_col]);
    for (int v = 0; v < kVotesPerTask; ++v) {
      const auto raw = trim(table.rows[r][vote_cols[v]]);
      auto l = parse_label(raw);
      if (!l)
        throw Error(ErrorCode::InvalidArgument,
                    "votes " + detail::row_tag(r + 1) + ": invalid vote '" + raw + "'");
      rec.votes[v] = *l;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline OccupationMap read_occupations(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto code_col = table.column("code", "occupations");
  const auto title_col = table.column("title", "occupations");
  const auto ind_col = table.column("industry_codes", "occupations");
  const auto weight_col = table.find_column("weight");

  OccupationMap out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Occupation occ;
    occ.title = trim(row[title_col]);
    for (auto& code : split_string(row[ind_col], ';'))
      if (auto c = trim(code); !c.empty()) occ.industry_codes.push_back(std::move(c));
    if (weight_col && !trim(row[*weight_col]).empty())
      occ.weight = std::stod(row[*weight_col]);
    auto code = trim(row[code_col]);
    if (!out.emplace(code, std::move(occ)).second)
      throw Error(ErrorCode::DuplicateId, "occupation \"" + code + "\" repeated");
  }
  return out;
}

inline IndustryMap read_industries(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto code_col = table.column("code", "industries");
  const auto title_col = table.column("title", "industries");
  IndustryMap out;
  for (const auto& row : table.rows) {
    auto code = trim(row[code_col]);
    if (!out.emplace(code, trim(row[title_col])).second)
      throw Error(ErrorCode::DuplicateId, "industry \"" + code + "\" repeated");
  }
  return out;
}

// Every occupation referenced by a task resolves, and every industry
// referenced by an occupation resolves.
inline void validate_maps(const std::vector<TaskStatement>& tasks, const OccupationMap& occupations,
                          const IndustryMap& industries) {
  for (const auto& t : tasks)
    if (t.occupation_code && !occupations.count(*t.occupation_code))
      throw Error(ErrorCode::UnknownOccupation,
                  "task \"" + t.id + "\" references \"" + *t.occupation_code + "\"");
  for (const auto& [code, occ] : occupations)
    for (const auto& ind : occ.industry_codes)
      if (!industries.count(ind))
        throw Error(ErrorCode::UnknownIndustry,
                    "occupation \"" + code + "\" references \"" + ind + "\"");
}

// ---------------------------------------------------------------------------
// Labels

// Returns the class holding at least `threshold` of the five votes, if any.
// With threshold >= 3 at most one class can qualify.
inline std::optional<Label> resolve_votes(const VoteRecord& votes, int threshold = 4) {
  if (threshold < 3 || threshold > kVotesPerTask)
    throw Error(ErrorCode::InvalidArgument, "vote threshold must be in [3,5]");
  std::array<int, kNumClasses> tally{};
  for (auto v : votes.votes) ++tally[index_of(v)];
  for (int c = 0; c < kNumClasses; ++c)
    if (tally[c] >= threshold) return label_from_index(c);
  return std::nullopt;
}

// Joins statements with their vote records. Tasks with no vote record or no
// consensus get an empty label.
inline std::vector<CorpusEntry> label_corpus(const std::vector<TaskStatement>& tasks,
                                             const std::vector<VoteRecord>& votes,
                                             int threshold = 4) {
  std::unordered_map<std::string, const VoteRecord*> by_id;
  for (const auto& v : votes) by_id[v.task_id] = &v;
  std::vector<CorpusEntry> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) {
    CorpusEntry e{t, std::nullopt};
    if (auto it = by_id.find(t.id); it != by_id.end()) e.label = resolve_votes(*it->second, threshold);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<AnnotatedExample> labeled_examples(const std::vector<CorpusEntry>& corpus) {
  std::vector<AnnotatedExample> out;
  for (const auto& e : corpus)
    if (e.label) out.push_back({e.task, *e.label, Origin::Human, std::nullopt});
  return out;
}

inline ClassCounts class_counts(const std::vector<AnnotatedExample>& examples) {
  ClassCounts counts{};
  for (const auto& e : examples) ++counts[index_of(e.label)];
  return counts;
}

// ---------------------------------------------------------------------------
// Splitting

namespace detail {

// Apportions `n` units across three bins proportionally to `ratios` using
// largest remainders; ties go to the earlier bin.
inline std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = ratios[k] * static_cast<double>(n);
    out[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[k] = exact - static_cast<double>(out[k]);
    used += out[k];
  }
  while (used > n) {  // only reachable through the 1e-9 nudge
    for (int k = 2; k >= 0 && used > n; --k)
      if (out[k] > 0) --out[k], --used;
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (int i = 0; used < n; i = (i + 1) % 3) {
    if (ratios[order[i]] > 0.0) ++out[order[i]], ++used;
  }
  return out;
}

}  // namespace detail

inline void validate_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.eval < 0 || r.test < 0)
    throw Error(ErrorCode::InvalidArgument, "split ratios must be non-negative");
  if (std::abs(r.train + r.eval + r.test - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "split ratios must sum to 1");
}

// Per-class stratified split. Per-class split sizes are rounded so that each
// split's overall size also follows the largest-remainder apportionment of
// the whole corpus, and no cell strays more than one example from its exact
// proportional share.
inline SplitAssignment stratified_split(const std::vector<AnnotatedExample>& examples,
                                        const SplitRatios& ratios, std::uint64_t seed) {
  validate_ratios(ratios);
  const std::array<double, 3> r = {ratios.train, ratios.eval, ratios.test};

  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < examples.size(); ++i)
    members[index_of(examples[i].label)].push_back(i);
  for (int c = 0; c < kNumClasses; ++c)
    if (members[c].empty())
      throw Error(ErrorCode::EmptyClass,
                  "class " + std::string(label_name(label_from_index(c))) + " has no examples");

  // Cell sizes: floors first, then hand out leftover units by largest
  // fractional part subject to row (class) and column (split) totals. A cell
  // is bumped at most once; if the column totals cannot all be met, the
  // second pass drops them so every cell stays within one of its exact share.
  const auto totals = detail::largest_remainder(examples.size(), r);
  std::array<std::array<std::size_t, 3>, kNumClasses> cell{};
  std::array<std::array<double, 3>, kNumClasses> frac{};
  std::array<std::size_t, kNumClasses> row_left{};
  std::array<std::size_t, 3> col_left = totals;
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = r[k] * static_cast<double>(members[c].size());
      cell[c][k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      frac[c][k] = std::max(0.0, exact - static_cast<double>(cell[c][k]));
      used += cell[c][k];
    }
    row_left[c] = members[c].size() - std::min(used, members[c].size());
    for (int k = 0; k < 3; ++k) col_left[k] -= std::min(col_left[k], cell[c][k]);
  }
  std::array<std::array<bool, 3>, kNumClasses> bumped{};
  for (bool relaxed : {false, true}) {
    for (;;) {
      int best_c = -1, best_k = -1;
      double best = -1.0;
      for (int c = 0; c < kNumClasses; ++c) {
        if (!row_left[c]) continue;
        for (int k = 0; k < 3; ++k) {
          if ((!relaxed && !col_left[k]) || bumped[c][k] || r[k] == 0.0) continue;
          if (frac[c][k] > best) best = frac[c][k], best_c = c, best_k = k;
        }
      }
      if (best_c < 0) break;
      ++cell[best_c][best_k];
      bumped[best_c][best_k] = true;
      --row_left[best_c];
      if (col_left[best_k]) --col_left[best_k];
    }
  }

  Rng rng(mix_seed(seed, 0x5911));
  std::vector<SplitPart> part(examples.size(), SplitPart::Train);
  for (int c = 0; c < kNumClasses; ++c) {
    auto idx = members[c];
    rng.shuffle(idx);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < cell[c][k] && pos < idx.size(); ++j)
        part[idx[pos++]] = static_cast<SplitPart>(k);
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& id = examples[i].task.id;
    switch (part[i]) {
      case SplitPart::Train: out.train.push_back(id); break;
      case SplitPart::Eval: out.eval.push_back(id); break;
      case SplitPart::Test: out.test.push_back(id); break;
    }
  }
  return out;
}

// Selects the examples whose ids appear in `ids`, in example order.
inline std::vector<AnnotatedExample> select(const std::vector<AnnotatedExample>& examples,
                                            const std::vector<std::string>& ids) {
  std::unordered_set<std::string> want(ids.begin(), ids.end());
  std::vector<AnnotatedExample> out;
  for (const auto& e : examples)
    if (want.count(e.task.id)) out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Stage files

inline void write_corpus(const std::vector<CorpusEntry>& corpus, const std::filesystem::path& path) {
  csv::Writer w({"id", "text", "source", "occupation_code", "label"});
  for (const auto& e : corpus)
    w.row({e.task.id, e.task.text, std::string(source_name(e.task.source)),
           e.task.occupation_code.value_or(""),
           e.label ? std::string(label_name(*e.label)) : std::string()});
  w.save(path);
}

inline std::vector<CorpusEntry> read_normalized_corpus(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto id = t.column("id"), text = t.column("text"), src = t.column("source"),
             occ = t.column("occupation_code"), lab = t.column("label");
  std::vector<CorpusEntry> out;
  for (const auto& row : t.rows) {
    CorpusEntry e;
    e.task.id = row[id];
    e.task.text = row[text];
    auto s = parse_source(row[src]);
    if (!s) throw Error(ErrorCode::MalformedCsv, "unknown source '" + row[src] + "'");
    e.task.source = *s;
    if (!row[occ].empty()) e.task.occupation_code = row[occ];
    if (!row[lab].empty()) {
      e.label = parse_label(row[lab]);
      if (!e.label) throw Error(ErrorCode::MalformedCsv, "unknown label '" + row[lab] + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_split(const SplitAssignment& split, const std::filesystem::path& path) {
  csv::Writer w({"id", "split"});
  for (const auto& id : split.train) w.row({id, "train"});
  for (const auto& id : split.eval) w.row({id, "eval"});
  for (const auto& id : split.test) w.row({id, "test"});
  w.save(path);
}

inline SplitAssignment read_split(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto id = t.column("id"), part = t.column("split");
  SplitAssignment out;
  for (const auto& row : t.rows) {
    if (row[part] == "train") out.train.push_back(row[id]);
    else if (row[part] == "eval") out.eval.push_back(row[id]);
    else if (row[part] == "test") out.test.push_back(row[id]);
    else throw Error(ErrorCode::MalformedCsv, "unknown split '" + row[part] + "'");
  }
  return out;
}

}  // namespace taskrisk
