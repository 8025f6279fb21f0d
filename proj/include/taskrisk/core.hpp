// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taskrisk {

// Automatability classes. The numeric order is also the tie-break order.
enum class Label : int { Substitution = 0, Complementarity = 1, Negligibility = 2 };

inline constexpr int kNumClasses = 3;
inline constexpr std::array<Label, kNumClasses> kAllLabels = {
    Label::Substitution, Label::Complementarity, Label::Negligibility};

inline constexpr int index_of(Label l) { return static_cast<int>(l); }

inline Label label_from_index(int i) {
  if (i < 0 || i >= kNumClasses) throw std::out_of_range("class index out of range");
  return static_cast<Label>(i);
}

inline std::string_view label_name(Label l) {
  switch (l) {
    case Label::Substitution: return "substitution";
    case Label::Complementarity: return "complementarity";
    case Label::Negligibility: return "negligibility";
  }
  return "?";
}

// Accepts the full lowercase name or the single-letter code (S/C/N), any case.
inline std::optional<Label> parse_label(std::string_view s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "s" || t == "substitution") return Label::Substitution;
  if (t == "c" || t == "complementarity") return Label::Complementarity;
  if (t == "n" || t == "negligibility") return Label::Negligibility;
  return std::nullopt;
}

enum class ErrorCode {
  MissingColumn,
  DuplicateId,
  EmptyText,
  MalformedCsv,
  InvalidArgument,
  EmptyClass,
  EmptyCorpus,
  EmptySplit,
  ShapeMismatch,
  NonFiniteActivation,
  NonFiniteGradient,
  ProviderUnavailable,
  MalformedResponse,
  InsufficientVariants,
  MissingClass,
  UnknownOccupation,
  UnknownIndustry,
  ConfigInvalid,
  MissingArtifact,
  Io,
};

inline std::string_view error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::InsufficientVariants: return "InsufficientVariants";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::UnknownOccupation: return "UnknownOccupation";
    case ErrorCode::UnknownIndustry: return "UnknownIndustry";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Seeded generator with portable sampling. The standard distributions are
// implementation-defined, so anything that feeds a checkpoint or a split
// goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 finalizer, used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_string(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace taskrisk
