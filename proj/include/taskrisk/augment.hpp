// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "taskrisk/core.hpp"
#include "taskrisk/corpus.hpp"

namespace taskrisk {

struct ParaphraseRequest {
  std::string source_text;
  int n_variants = 1;
  double temperature = 0.7;

  void validate() const {
    if (trim(source_text).empty())
      throw Error(ErrorCode::InvalidArgument, "paraphrase source text is empty");
    if (n_variants < 1) throw Error(ErrorCode::InvalidArgument, "n_variants must be >= 1");
    if (!(temperature >= 0.0 && temperature <= 2.0))
      throw Error(ErrorCode::InvalidArgument, "temperature must be in [0,2]");
  }
};

// A text-generation backend. Implementations throw ProviderUnavailable for
// transport/auth failures and MalformedResponse for payloads that do not
// follow the contract.
class ProviderClient {
 public:
  virtual ~ProviderClient() = default;
  virtual std::vector<std::string> complete(const ParaphraseRequest& req) = 0;
};

// Returns at most `n_variants` distinct, non-empty candidates, none equal to
// the source text.
inline std::vector<std::string> paraphrase(const ParaphraseRequest& req, ProviderClient& provider) {
  req.validate();
  auto raw = provider.complete(req);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& v : raw) {
    auto t = trim(v);
    if (t.empty() || t == req.source_text || !seen.insert(t).second) continue;
    out.push_back(std::move(t));
    if (static_cast<int>(out.size()) == req.n_variants) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarity check

struct ValidationVerdict {
  bool accepted = false;
  double similarity = 0.0;
  std::optional<std::string> reason;
};

// Lowercased runs of ASCII alphanumerics.
inline std::vector<std::string> alnum_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Cosine similarity of unigram term-frequency vectors.
inline double tf_cosine(std::string_view a, std::string_view b) {
  std::map<std::string, double> ta, tb;
  for (auto& t : alnum_tokens(a)) ta[t] += 1.0;
  for (auto& t : alnum_tokens(b)) tb[t] += 1.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, x] : ta) {
    na += x * x;
    if (auto it = tb.find(t); it != tb.end()) dot += x * it->second;
  }
  for (const auto& [t, y] : tb) nb += y * y;
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

inline ValidationVerdict validate_paraphrase(std::string_view original, std::string_view candidate,
                                             double floor = 0.5) {
  ValidationVerdict v;
  v.similarity = tf_cosine(original, candidate);
  if (candidate == original) {
    v.reason = "identical to the original";
  } else if (v.similarity < floor) {
    v.reason = "similarity below floor";
  } else {
    v.accepted = true;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Offline provider

// Rule-based paraphraser: phrase-level synonym substitution, optional
// reordering of a trailing "by ..." clause, and qualifier suffixes when the
// first two rules run out of distinct outputs. Variant 0 applies the first
// synonym of every matched phrase; later variants are drawn from a generator
// keyed on (seed, text, variant index), so the output list for n variants is
// a prefix of the list for n + 1.
class MockProvider : public ProviderClient {
 public:
  struct Rule {
    std::string phrase;  // lowercase, space separated
    std::vector<std::string> alternatives;
  };

  explicit MockProvider(std::uint64_t seed = 0) : seed_(seed), rules_(default_rules()) {
    std::stable_sort(rules_.begin(), rules_.end(), [](const Rule& a, const Rule& b) {
      return word_count(a.phrase) > word_count(b.phrase);
    });
  }

  std::vector<std::string> complete(const ParaphraseRequest& req) override {
    req.validate();
    const auto words = split_words(req.source_text);
    std::vector<std::string> out;
    std::unordered_set<std::string> seen{req.source_text};
    const int max_attempts = req.n_variants * 8 + 16;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < req.n_variants;
         ++attempt) {
      auto cand = render(words, attempt, req.temperature, req.source_text);
      if (seen.insert(cand).second) out.push_back(std::move(cand));
    }
    return out;
  }

  static std::vector<Rule> default_rules() {
    return {
        {"generate", {"create", "produce"}},
        {"utilizing", {"that incorporate", "using"}},
        {"visual aids", {"visual elements", "visual materials"}},
        {"such as", {"like", "including"}},
        {"charts", {"diagrams", "figures"}},
        {"graphs", {"plots", "chart displays"}},
        {"narratives", {"descriptive narratives", "written accounts"}},
        {"examining", {"scrutinizing", "reviewing"}},
        {"documenting", {"recording", "logging"}},
        {"test data", {"the results of tests", "testing results"}},
        {"record", {"log", "document"}},
        {"prepare", {"draft", "put together"}},
        {"operate", {"run", "work"}},
        {"maintain", {"keep", "upkeep"}},
        {"monitor", {"track", "oversee"}},
        {"provide", {"offer", "supply"}},
        {"review", {"examine", "assess"}},
        {"ensure", {"make sure", "confirm"}},
        {"assist", {"help", "support"}},
        {"coordinate", {"organize", "arrange"}},
        {"develop", {"design", "create"}},
        {"inspect", {"check", "examine"}},
        {"conduct", {"carry out", "perform"}},
        {"perform", {"carry out", "execute"}},
        {"data", {"information", "records"}},
        {"equipment", {"apparatus", "machinery"}},
        {"customers", {"clients", "patrons"}},
        {"clients", {"customers", "patrons"}},
        {"staff", {"personnel", "employees"}},
        {"schedule", {"plan", "timetable"}},
        {"analyze", {"evaluate", "study"}},
        {"manage", {"oversee", "direct"}},
        {"teach", {"instruct", "educate"}},
        {"advise", {"counsel", "guide"}},
        {"load", {"pack", "fill"}},
        {"trucks", {"lorries", "vehicles"}},
        {"machinery", {"machines", "equipment"}},
        {"children", {"kids", "young people"}},
        {"patients", {"people in care", "individuals receiving care"}},
        {"routine", {"regular", "standard"}},
        {"procedures", {"processes", "protocols"}},
        {"information", {"details", "facts"}},
        {"program", {"programme", "scheme"}},
        {"research", {"investigation", "study"}},
    };
  }

 private:
  static int word_count(std::string_view s) {
    return static_cast<int>(std::count(s.begin(), s.end(), ' ')) + 1;
  }

  // Splits into word and non-word runs so the sentence can be reassembled.
  struct Piece {
    std::string text;
    bool word = false;
  };

  static std::vector<Piece> split_words(std::string_view s) {
    std::vector<Piece> out;
    for (std::size_t i = 0; i < s.size();) {
      const bool w = std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' || s[i] == '\'';
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == '\'') == w)
        ++j;
      out.push_back({std::string(s.substr(i, j - i)), w});
      i = j;
    }
    return out;
  }

  static std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }

  // Tries to match `rule` at word piece `i`. Returns the index one past the
  // last consumed piece, or 0.
  static std::size_t match(const std::vector<Piece>& p, std::size_t i, const Rule& rule) {
    const auto want = split_string(rule.phrase, ' ');
    std::size_t k = i;
    for (std::size_t w = 0; w < want.size(); ++w) {
      if (w > 0) {
        if (k >= p.size() || p[k].word || p[k].text != " ") return 0;
        ++k;
      }
      if (k >= p.size() || !p[k].word || lower(p[k].text) != want[w]) return 0;
      ++k;
    }
    return k;
  }

  std::string render(const std::vector<Piece>& pieces, int attempt, double temperature,
                     const std::string& source) const {
    Rng rng(mix_seed(seed_ ^ hash_string(source), static_cast<std::uint64_t>(attempt)));
    const double p_sub = std::min(1.0, 0.35 + 0.3 * temperature);
    std::string out;
    for (std::size_t i = 0; i < pieces.size();) {
      if (!pieces[i].word) {
        out += pieces[i].text;
        ++i;
        continue;
      }
      std::size_t end = 0;
      const Rule* hit = nullptr;
      for (const auto& rule : rules_) {
        if ((end = match(pieces, i, rule))) {
          hit = &rule;
          break;
        }
      }
      if (!hit) {
        out += pieces[i].text;
        ++i;
        continue;
      }
      std::string original;
      for (std::size_t k = i; k < end; ++k) original += pieces[k].text;
      std::string repl;
      if (attempt == 0) {
        repl = hit->alternatives.front();
      } else if (rng.uniform() < p_sub) {
        repl = hit->alternatives[rng.below(hit->alternatives.size())];
      } else {
        repl = original;
      }
      if (!repl.empty() && std::isupper(static_cast<unsigned char>(original[0])))
        repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
      out += repl;
      i = end;
    }
    if (attempt > 0 && rng.uniform() < 0.5) out = reorder_by_clause(out);
    if (attempt > 2) {
      static const std::vector<std::string> qualifiers = {
          "as needed",        "as required",          "on a regular basis",
          "when necessary",   "according to procedures", "as part of daily duties",
          "in line with guidelines", "as directed",   "where appropriate",
          "on request",       "in a timely manner",   "as assigned"};
      out = append_qualifier(out, qualifiers[(attempt - 3) % qualifiers.size()]);
      if (attempt - 3 >= static_cast<int>(qualifiers.size()))
        out = append_qualifier(out, qualifiers[(attempt - 3) / qualifiers.size() % qualifiers.size()]);
    }
    return out;
  }

  static std::string append_qualifier(const std::string& s, const std::string& q) {
    std::string body = s;
    std::string tail;
    while (!body.empty() && (body.back() == '.' || body.back() == ' ')) {
      if (body.back() == '.') tail = ".";
      body.pop_back();
    }
    return body + " " + q + tail;
  }

  // "A by B." -> "By B, a."
  static std::string reorder_by_clause(const std::string& s) {
    const auto pos = s.find(" by ");
    if (pos == std::string::npos || pos == 0) return s;
    std::string head = s.substr(0, pos);
    std::string clause = s.substr(pos + 4);
    bool period = false;
    while (!clause.empty() && (clause.back() == '.' || clause.back() == ' ')) {
      period = period || clause.back() == '.';
      clause.pop_back();
    }
    if (clause.empty()) return s;
    if (head.size() > 1 && std::isupper(static_cast<unsigned char>(head[0])) &&
        !std::isupper(static_cast<unsigned char>(head[1])))
      head[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(head[0])));
    return "By " + clause + ", " + head + (period ? "." : "");
  }

  std::uint64_t seed_;
  std::vector<Rule> rules_;
};

// ---------------------------------------------------------------------------
// Class-balance policies

enum class AugmentMode { Original, Balanced, Multiplier, Targets };

inline constexpr std::array<double, 6> kAllowedMultipliers = {1.5, 2.0, 2.5, 3.0, 4.0, 5.0};

struct AugmentationPolicy {
  AugmentMode mode = AugmentMode::Original;
  std::optional<double> multiplier;      // iff mode == Multiplier
  std::optional<ClassCounts> targets;    // iff mode == Targets

  static AugmentationPolicy original() { return {}; }
  static AugmentationPolicy balanced() { return {AugmentMode::Balanced, std::nullopt, std::nullopt}; }
  static AugmentationPolicy times(double m) { return {AugmentMode::Multiplier, m, std::nullopt}; }
  static AugmentationPolicy target_counts(ClassCounts t) { return {AugmentMode::Targets, std::nullopt, t}; }

  void validate() const {
    if (multiplier.has_value() != (mode == AugmentMode::Multiplier))
      throw Error(ErrorCode::InvalidArgument, "multiplier is required exactly for Multiplier mode");
    if (targets.has_value() != (mode == AugmentMode::Targets))
      throw Error(ErrorCode::InvalidArgument, "targets are required exactly for Targets mode");
    if (multiplier &&
        std::find(kAllowedMultipliers.begin(), kAllowedMultipliers.end(), *multiplier) ==
            kAllowedMultipliers.end())
      throw Error(ErrorCode::InvalidArgument,
                  "multiplier must be one of 1.5, 2, 2.5, 3, 4, 5");
  }
};

struct AugmentOptions {
  double similarity_floor = 0.5;
  double temperature = 0.7;
  int oversample = 2;  // extra variants requested per parent to absorb rejections
};

namespace detail {

inline ClassCounts policy_targets(const AugmentationPolicy& policy, const ClassCounts& counts) {
  ClassCounts t = counts;
  switch (policy.mode) {
    case AugmentMode::Original:
      break;
    case AugmentMode::Balanced: {
      const auto m = *std::max_element(counts.begin(), counts.end());
      t.fill(m);
      break;
    }
    case AugmentMode::Multiplier:
      for (int c = 0; c < kNumClasses; ++c)
        t[c] = static_cast<std::size_t>(
            std::ceil(*policy.multiplier * static_cast<double>(counts[c]) - 1e-9));
      break;
    case AugmentMode::Targets:
      t = *policy.targets;
      for (int c = 0; c < kNumClasses; ++c)
        if (t[c] < counts[c])
          throw Error(ErrorCode::InvalidArgument,
                      "target count for " + std::string(label_name(label_from_index(c))) +
                          " is below the original count");
      break;
  }
  return t;
}

}  // namespace detail

inline std::string augmented_id(const std::string& parent, int variant_index) {
  return parent + "~aug" + std::to_string(variant_index);
}

// Expands `examples` toward the policy's per-class targets. When `split` is
// given, only its training examples are counted and used as parents; other
// examples pass through untouched. The result lists the input examples in
// their original order followed by the new ones sorted by
// (parent_id, variant_index).
inline std::vector<AnnotatedExample> apply_policy(const std::vector<AnnotatedExample>& examples,
                                                  const AugmentationPolicy& policy,
                                                  ProviderClient& provider, std::uint64_t seed,
                                                  const AugmentOptions& options = {},
                                                  const SplitAssignment* split = nullptr) {
  policy.validate();
  if (policy.mode == AugmentMode::Original) return examples;

  std::unordered_set<std::string> train_ids;
  if (split) train_ids.insert(split->train.begin(), split->train.end());
  auto eligible = [&](const AnnotatedExample& e) {
    return e.origin == Origin::Human && (!split || train_ids.count(e.task.id));
  };

  std::array<std::vector<std::size_t>, kNumClasses> parents;
  ClassCounts counts{};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (split && !train_ids.count(e.task.id)) continue;
    ++counts[index_of(e.label)];
    if (eligible(e)) parents[index_of(e.label)].push_back(i);
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (parents[c].empty())
      throw Error(ErrorCode::EmptyClass, "no parent examples for class " +
                                             std::string(label_name(label_from_index(c))));

  const auto targets = detail::policy_targets(policy, counts);
  std::unordered_set<std::string> taken_ids;
  for (const auto& e : examples) taken_ids.insert(e.task.id);

  struct Child {
    std::string parent_id;
    int variant_index;
    AnnotatedExample example;
  };
  std::vector<Child> children;
  std::array<std::size_t, kNumClasses> shortfall{};

  Rng rng(mix_seed(seed, 0xa06));
  for (int c = 0; c < kNumClasses; ++c) {
    if (targets[c] <= counts[c]) continue;
    const std::size_t need = targets[c] - counts[c];
    auto order = parents[c];
    rng.shuffle(order);  // decides which parents carry the remainder
    const std::size_t base = need / order.size(), extra = need % order.size();

    struct Pool {
      std::size_t parent;
      std::vector<std::string> accepted;
      std::size_t used = 0;
    };
    std::vector<Pool> pools;
    std::size_t produced = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t quota = base + (rank < extra ? 1 : 0);
      if (quota == 0) continue;
      const auto& parent = examples[order[rank]];
      ParaphraseRequest req{parent.task.text, static_cast<int>(quota) + options.oversample,
                            options.temperature};
      Pool pool{order[rank], {}, 0};
      for (auto& v : paraphrase(req, provider))
        if (validate_paraphrase(parent.task.text, v, options.similarity_floor).accepted)
          pool.accepted.push_back(std::move(v));
      pool.used = std::min(quota, pool.accepted.size());
      produced += pool.used;
      pools.push_back(std::move(pool));
    }
    // Top up from leftover accepted variants, in parent rank order.
    for (auto& pool : pools) {
      while (produced < need && pool.used < pool.accepted.size()) ++pool.used, ++produced;
    }
    shortfall[c] = need - produced;
    for (auto& pool : pools) {
      const auto& parent = examples[pool.parent];
      for (std::size_t k = 0; k < pool.used; ++k) {
        AnnotatedExample child;
        child.task = parent.task;
        child.task.id = augmented_id(parent.task.id, static_cast<int>(k) + 1);
        child.task.text = pool.accepted[k];
        child.label = parent.label;
        child.origin = Origin::Augmented;
        child.parent_id = parent.task.id;
        if (!taken_ids.insert(child.task.id).second)
          throw Error(ErrorCode::DuplicateId, "augmented id collides: " + child.task.id);
        children.push_back({parent.task.id, static_cast<int>(k) + 1, std::move(child)});
      }
    }
  }

  if (std::any_of(shortfall.begin(), shortfall.end(), [](std::size_t s) { return s > 0; })) {
    std::string msg = "provider could not supply enough accepted paraphrases; shortfall";
    for (int c = 0; c < kNumClasses; ++c)
      msg += " " + std::string(label_name(label_from_index(c))) + "=" + std::to_string(shortfall[c]);
    throw Error(ErrorCode::InsufficientVariants, msg);
  }

  std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
    return std::tie(a.parent_id, a.variant_index) < std::tie(b.parent_id, b.variant_index);
  });
  auto out = examples;
  out.reserve(out.size() + children.size());
  for (auto& ch : children) out.push_back(std::move(ch.example));
  return out;
}

// ---------------------------------------------------------------------------
// augmented.csv

inline void write_augmented(const std::vector<AnnotatedExample>& examples,
                            const std::filesystem::path& path) {
  csv::Writer w({"id", "text", "label", "origin", "parent_id"});
  for (const auto& e : examples)
    w.row({e.task.id, e.task.text, std::string(label_name(e.label)),
           std::string(origin_name(e.origin)), e.parent_id.value_or("")});
  w.save(path);
}

// Occupation codes and sources are not part of this file; callers that need
// them join back on parent_id.
inline std::vector<AnnotatedExample> read_augmented(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto id = t.column("id"), text = t.column("text"), lab = t.column("label"),
             org = t.column("origin"), par = t.column("parent_id");
  std::vector<AnnotatedExample> out;
  for (const auto& row : t.rows) {
    AnnotatedExample e;
    e.task.id = row[id];
    e.task.text = row[text];
    auto l = parse_label(row[lab]);
    if (!l) throw Error(ErrorCode::MalformedCsv, "unknown label '" + row[lab] + "'");
    e.label = *l;
    if (row[org] == "HUMAN") e.origin = Origin::Human;
    else if (row[org] == "AUGMENTED") e.origin = Origin::Augmented;
    else throw Error(ErrorCode::MalformedCsv, "unknown origin '" + row[org] + "'");
    if (!row[par].empty()) e.parent_id = row[par];
    if (e.parent_id.has_value() != (e.origin == Origin::Augmented))
      throw Error(ErrorCode::MalformedCsv, "parent_id must be set exactly for AUGMENTED rows");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace taskrisk
