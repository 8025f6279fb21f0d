// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "taskrisk/core.hpp"
#include "taskrisk/corpus.hpp"
#include "taskrisk/csv.hpp"
#include "taskrisk/model.hpp"

namespace taskrisk {

struct PredictionRecord {
  std::string task_id;
  std::array<double, kNumClasses> probabilities{};
  Label label = Label::Substitution;
  std::string occupation_code;
};

struct OccupationProfile {
  std::string code;
  std::string title;
  std::size_t n_tasks = 0;
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> distribution{};
  bool high_substitution = false;
  bool high_complementarity = false;
  bool safe = false;
};

// Tasks without an occupation code are not attributed to any occupation.
// Occupations with no predicted tasks are omitted. Output is sorted by code.
inline std::vector<OccupationProfile> occupation_profiles(const std::vector<PredictionRecord>& predictions,
                                                          const OccupationMap& occupations) {
  std::map<std::string, OccupationProfile> by_code;
  for (const auto& p : predictions) {
    if (p.occupation_code.empty()) continue;
    auto occ = occupations.find(p.occupation_code);
    if (occ == occupations.end())
      throw Error(ErrorCode::UnknownOccupation, "task " + p.task_id + " maps to " + p.occupation_code);
    auto& prof = by_code[p.occupation_code];
    prof.code = p.occupation_code;
    prof.title = occ->second.title;
    ++prof.n_tasks;
    ++prof.counts[index_of(p.label)];
  }
  std::vector<OccupationProfile> out;
  out.reserve(by_code.size());
  for (auto& [code, prof] : by_code) {
    for (int c = 0; c < kNumClasses; ++c)
      prof.distribution[c] = static_cast<double>(prof.counts[c]) / static_cast<double>(prof.n_tasks);
    // Strict majority, decided on counts so no rounding can flip a tie.
    prof.high_substitution = 2 * prof.counts[0] > prof.n_tasks;
    prof.high_complementarity = 2 * prof.counts[1] > prof.n_tasks;
    prof.safe = 2 * prof.counts[2] > prof.n_tasks;
    out.push_back(std::move(prof));
  }
  return out;
}

// count/total as a percentage with one decimal, rounded half away from zero.
// Integer arithmetic keeps 244/974 -> "25.1%" free of binary rounding.
inline std::string format_percent(std::size_t count, std::size_t total) {
  if (total == 0) return "0.0%";
  const auto tenths = (2 * count * 1000 + total) / (2 * total);
  return fmt::format("{}.{}%", tenths / 10, tenths % 10);
}

struct FlagSummary {
  std::size_t count = 0;
  std::string percent;
};

struct Summary {
  std::size_t n_occupations = 0;
  std::size_t n_tasks = 0;
  std::array<std::size_t, kNumClasses> task_class_counts{};
  FlagSummary high_substitution;
  FlagSummary high_complementarity;
  FlagSummary safe;
};

inline Summary summarize(const std::vector<OccupationProfile>& profiles) {
  Summary s;
  s.n_occupations = profiles.size();
  for (const auto& p : profiles) {
    s.n_tasks += p.n_tasks;
    for (int c = 0; c < kNumClasses; ++c) s.task_class_counts[c] += p.counts[c];
    s.high_substitution.count += p.high_substitution;
    s.high_complementarity.count += p.high_complementarity;
    s.safe.count += p.safe;
  }
  for (auto* f : {&s.high_substitution, &s.high_complementarity, &s.safe})
    f->percent = format_percent(f->count, s.n_occupations);
  return s;
}

struct IndustryProfile {
  std::string code;
  std::string title;
  std::vector<std::string> members;  // occupation codes, sorted
  std::array<double, kNumClasses> distribution{};
};

struct IndustryRankings {
  std::vector<IndustryProfile> industries;  // sorted by code
  std::vector<std::string> top;             // highest substitution fraction first
  std::vector<std::string> bottom;          // highest negligibility fraction first
};

// Unweighted mean of member-occupation distributions. An occupation listed
// under several industries counts fully in each.
inline IndustryRankings industry_profiles(const std::vector<OccupationProfile>& profiles,
                                          const OccupationMap& occupations, const IndustryMap& industries,
                                          std::size_t top_k = 10) {
  std::map<std::string, IndustryProfile> by_code;
  for (const auto& p : profiles) {
    auto occ = occupations.find(p.code);
    if (occ == occupations.end()) throw Error(ErrorCode::UnknownOccupation, p.code);
    for (const auto& ic : occ->second.industry_codes) {
      auto ind = industries.find(ic);
      if (ind == industries.end())
        throw Error(ErrorCode::UnknownIndustry, "occupation " + p.code + " lists industry " + ic);
      auto& ip = by_code[ic];
      ip.code = ic;
      ip.title = ind->second;
      ip.members.push_back(p.code);
      for (int c = 0; c < kNumClasses; ++c) ip.distribution[c] += p.distribution[c];
    }
  }
  IndustryRankings r;
  for (auto& [code, ip] : by_code) {
    std::sort(ip.members.begin(), ip.members.end());
    for (auto& d : ip.distribution) d /= static_cast<double>(ip.members.size());
    r.industries.push_back(std::move(ip));
  }
  auto ranked = [&](int cls) {
    std::vector<const IndustryProfile*> v;
    for (const auto& ip : r.industries) v.push_back(&ip);
    std::sort(v.begin(), v.end(), [cls](const IndustryProfile* a, const IndustryProfile* b) {
      if (a->distribution[cls] != b->distribution[cls]) return a->distribution[cls] > b->distribution[cls];
      return a->code < b->code;
    });
    std::vector<std::string> codes;
    for (std::size_t i = 0; i < std::min(top_k, v.size()); ++i) codes.push_back(v[i]->code);
    return codes;
  };
  r.top = ranked(index_of(Label::Substitution));
  r.bottom = ranked(index_of(Label::Negligibility));
  return r;
}

// ---------------------------------------------------------------------------
// Attention term weights

struct AttentionExport {
  std::string task_id;
  std::vector<TermMass> terms;
};

using TermWeightTable = std::array<std::vector<TermMass>, kNumClasses>;

// Sums each term's attention mass over the tasks predicted as each class and
// keeps the `top_k` heaviest terms (ties by term). Tasks without an export
// contribute nothing.
inline TermWeightTable term_weights(const std::vector<PredictionRecord>& predictions,
                                    const std::vector<AttentionExport>& exports, std::size_t top_k = 100) {
  std::map<std::string, const AttentionExport*> by_task;
  for (const auto& e : exports) by_task[e.task_id] = &e;
  std::array<std::map<std::string, double>, kNumClasses> sums;
  for (const auto& p : predictions) {
    auto it = by_task.find(p.task_id);
    if (it == by_task.end()) continue;
    for (const auto& tm : it->second->terms) sums[index_of(p.label)][tm.term] += tm.mass;
  }
  TermWeightTable table;
  for (int c = 0; c < kNumClasses; ++c) {
    for (const auto& [term, mass] : sums[c]) table[c].push_back({term, mass});
    std::stable_sort(table[c].begin(), table[c].end(),
                     [](const TermMass& a, const TermMass& b) { return a.mass > b.mass; });
    if (table[c].size() > top_k) table[c].resize(top_k);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Files

inline std::string format_prob(double p) { return fmt::format("{:.9f}", p); }

inline void write_predictions(const std::vector<PredictionRecord>& preds, const std::filesystem::path& path) {
  csv::Writer w({"task_id", "p_substitution", "p_complementarity", "p_negligibility", "label", "occupation_code"});
  for (const auto& p : preds)
    w.row({p.task_id, format_prob(p.probabilities[0]), format_prob(p.probabilities[1]),
           format_prob(p.probabilities[2]), std::string(label_name(p.label)), p.occupation_code});
  w.save(path);
}

inline std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string());
  const auto t = csv::read(path);
  const std::string src = path.filename().string();
  const auto id = t.column("task_id", src), p0 = t.column("p_substitution", src),
             p1 = t.column("p_complementarity", src), p2 = t.column("p_negligibility", src),
             lab = t.column("label", src), occ = t.column("occupation_code", src);
  std::vector<PredictionRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    PredictionRecord p;
    p.task_id = row[id];
    try {
      p.probabilities = {std::stod(row[p0]), std::stod(row[p1]), std::stod(row[p2])};
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedCsv, src + " row " + std::to_string(r + 2) + ": bad probability");
    }
    auto l = parse_label(row[lab]);
    if (!l) throw Error(ErrorCode::MalformedCsv, src + " row " + std::to_string(r + 2) + ": bad label");
    p.label = *l;
    p.occupation_code = row[occ];
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_attention(const std::vector<AttentionExport>& exports, const std::filesystem::path& path) {
  csv::Writer w({"task_id", "position", "term", "mass"});
  for (const auto& e : exports)
    for (std::size_t i = 0; i < e.terms.size(); ++i)
      w.row({e.task_id, std::to_string(i), e.terms[i].term, format_prob(e.terms[i].mass)});
  w.save(path);
}

inline std::vector<AttentionExport> read_attention(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string());
  const auto t = csv::read(path);
  const std::string src = path.filename().string();
  const auto id = t.column("task_id", src), term = t.column("term", src), mass = t.column("mass", src);
  std::vector<AttentionExport> out;
  for (const auto& row : t.rows) {
    if (out.empty() || out.back().task_id != row[id]) out.push_back({row[id], {}});
    out.back().terms.push_back({row[term], std::stod(row[mass])});
  }
  return out;
}

inline void write_occupation_profiles(const std::vector<OccupationProfile>& profiles,
                                      const std::filesystem::path& path) {
  csv::Writer w({"occupation_code", "title", "n_tasks", "substitution", "complementarity", "negligibility",
                 "high_substitution", "high_complementarity", "safe"});
  for (const auto& p : profiles)
    w.row({p.code, p.title, std::to_string(p.n_tasks), format_prob(p.distribution[0]),
           format_prob(p.distribution[1]), format_prob(p.distribution[2]), p.high_substitution ? "1" : "0",
           p.high_complementarity ? "1" : "0", p.safe ? "1" : "0"});
  w.save(path);
}

inline void write_industry_profiles(const IndustryRankings& r, const std::filesystem::path& path) {
  csv::Writer w({"industry_code", "title", "n_occupations", "substitution", "complementarity", "negligibility"});
  for (const auto& ip : r.industries)
    w.row({ip.code, ip.title, std::to_string(ip.members.size()), format_prob(ip.distribution[0]),
           format_prob(ip.distribution[1]), format_prob(ip.distribution[2])});
  w.save(path);
}

inline void write_term_weights(const TermWeightTable& table, const std::filesystem::path& dir) {
  for (int c = 0; c < kNumClasses; ++c) {
    csv::Writer w({"term", "mass"});
    for (const auto& tm : table[c]) w.row({tm.term, format_prob(tm.mass)});
    w.save(dir / ("term_weights_" + std::string(label_name(label_from_index(c))) + ".csv"));
  }
}

inline nlohmann::ordered_json summary_json(const Summary& s, const IndustryRankings* industries = nullptr) {
  nlohmann::ordered_json j;
  j["n_tasks"] = s.n_tasks;
  j["n_occupations"] = s.n_occupations;
  nlohmann::ordered_json tasks;
  for (int c = 0; c < kNumClasses; ++c)
    tasks[std::string(label_name(label_from_index(c)))] = {
        {"count", s.task_class_counts[c]}, {"percent", format_percent(s.task_class_counts[c], s.n_tasks)}};
  j["task_classes"] = std::move(tasks);
  auto flag = [](const FlagSummary& f) { return nlohmann::ordered_json{{"count", f.count}, {"percent", f.percent}}; };
  j["occupations"] = {{"high_substitution", flag(s.high_substitution)},
                      {"high_complementarity", flag(s.high_complementarity)},
                      {"safe", flag(s.safe)}};
  if (industries) j["industries"] = {{"top_substitution", industries->top}, {"top_negligibility", industries->bottom}};
  return j;
}

inline void write_summary(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

inline std::string format_summary(const Summary& s) {
  return fmt::format(
      "{} tasks across {} occupations\n"
      "  tasks: substitution {} ({}), complementarity {} ({}), negligibility {} ({})\n"
      "  occupations: high substitution {} ({}), high complementarity {} ({}), safe {} ({})\n",
      s.n_tasks, s.n_occupations, s.task_class_counts[0], format_percent(s.task_class_counts[0], s.n_tasks),
      s.task_class_counts[1], format_percent(s.task_class_counts[1], s.n_tasks), s.task_class_counts[2],
      format_percent(s.task_class_counts[2], s.n_tasks), s.high_substitution.count, s.high_substitution.percent,
      s.high_complementarity.count, s.high_complementarity.percent, s.safe.count, s.safe.percent);
}

}  // namespace taskrisk
