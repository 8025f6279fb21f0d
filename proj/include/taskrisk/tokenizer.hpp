// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taskrisk/core.hpp"

namespace taskrisk {

namespace utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes UTF-8; malformed bytes become U+FFFD.
inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1, cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2, cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3, cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4, cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
    if (!ok || overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view cps) {
  std::string out;
  for (auto cp : cps) append(out, cp);
  return out;
}

inline bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0x85 ||
         c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

inline bool is_control(char32_t c) { return c < 0x20 || (c >= 0x7F && c < 0xA0); }

inline bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
  return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x303F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20);
}

// ASCII and Latin-1 uppercase folding; other scripts pass through.
inline char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

}  // namespace utf8

// Lowercases, splits on whitespace, and emits each punctuation character as
// its own word. Control characters are dropped.
inline std::vector<std::u32string> pre_tokenize(std::string_view text) {
  std::vector<std::u32string> words;
  std::u32string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
  };
  for (char32_t c : utf8::decode(text)) {
    if (utf8::is_space(c)) {
      flush();
    } else if (utf8::is_control(c)) {
      continue;
    } else if (utf8::is_punct(c)) {
      flush();
      words.push_back(std::u32string(1, c));
    } else {
      cur.push_back(utf8::to_lower(c));
    }
  }
  flush();
  return words;
}

inline constexpr std::string_view kContinuation = "##";

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumSpecial = 4;

  Vocabulary() {
    for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(s);
  }

  // Builds from an ordered token list. The first four must be the specials.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    if (tokens.size() < kNumSpecial)
      throw Error(ErrorCode::InvalidArgument, "vocabulary is missing special tokens");
    for (int i = 0; i < kNumSpecial; ++i)
      if (tokens[i] != v.tokens_[i])
        throw Error(ErrorCode::InvalidArgument, "special token at id " + std::to_string(i) +
                                                    " must be " + v.tokens_[i]);
    for (std::size_t i = kNumSpecial; i < tokens.size(); ++i) {
      if (tokens[i].empty()) throw Error(ErrorCode::InvalidArgument, "empty vocabulary token");
      if (v.contains(tokens[i]))
        throw Error(ErrorCode::DuplicateId, "vocabulary token repeated: " + tokens[i]);
      v.add(tokens[i]);
    }
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& t) const { return ids_.count(t) > 0; }

  std::optional<int> id(const std::string& t) const {
    if (auto it = ids_.find(t); it != ids_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw Error(ErrorCode::InvalidArgument, "token id out of range: " + std::to_string(id));
    return tokens_[id];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  static bool is_special(int id) { return id >= 0 && id < kNumSpecial; }

  // vocab.txt: one token per line, line number = id, LF endings.
  std::string serialize() const {
    std::string out;
    for (const auto& t : tokens_) out += t + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f << serialize();
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(f, line)) tokens.push_back(line);
    return from_tokens(tokens);
  }

 private:
  void add(std::string t) {
    ids_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// WordPiece-style vocabulary learning. Words start as characters (word
// initial) and "##"-prefixed continuation characters; the most frequent
// adjacent pair is merged repeatedly until the vocabulary is full or the best
// pair falls below `min_freq`. Ties go to the lexicographically smallest
// merged token. Non-special tokens are finally ordered by (frequency desc,
// token asc).
inline Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t max_size,
                              std::size_t min_freq = 1) {
  if (max_size < 8) throw Error(ErrorCode::InvalidArgument, "max_size must be >= 8");
  if (min_freq < 1) throw Error(ErrorCode::InvalidArgument, "min_freq must be >= 1");

  std::map<std::u32string, std::size_t> word_freq;
  for (const auto& t : texts)
    for (auto& w : pre_tokenize(t)) ++word_freq[w];
  if (word_freq.empty()) throw Error(ErrorCode::EmptyCorpus, "no words to build a vocabulary from");

  struct Word {
    std::vector<std::string> pieces;
    std::size_t freq;
  };
  std::vector<Word> words;
  std::map<std::string, std::size_t> char_freq;
  for (const auto& [w, f] : word_freq) {
    Word word{{}, f};
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::string piece = i == 0 ? std::string() : std::string(kContinuation);
      utf8::append(piece, w[i]);
      char_freq[piece] += f;
      word.pieces.push_back(std::move(piece));
    }
    words.push_back(std::move(word));
  }

  const std::size_t budget = max_size - Vocabulary::kNumSpecial;
  std::vector<std::pair<std::string, std::size_t>> chosen(char_freq.begin(), char_freq.end());
  auto by_freq = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::stable_sort(chosen.begin(), chosen.end(), by_freq);
  if (chosen.size() > budget) chosen.resize(budget);
  std::unordered_map<std::string, std::size_t> in_vocab(chosen.begin(), chosen.end());

  auto merged = [](const std::string& a, const std::string& b) {
    return a + b.substr(kContinuation.size());
  };

  while (in_vocab.size() < budget) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_freq;
    for (const auto& w : words)
      for (std::size_t i = 0; i + 1 < w.pieces.size(); ++i)
        pair_freq[{w.pieces[i], w.pieces[i + 1]}] += w.freq;

    const std::pair<std::string, std::string>* best = nullptr;
    std::size_t best_freq = 0;
    std::string best_token;
    for (const auto& [pair, f] : pair_freq) {
      // Pieces dropped by the character budget cannot take part in merges.
      if (!in_vocab.count(pair.first) || !in_vocab.count(pair.second)) continue;
      auto tok = merged(pair.first, pair.second);
      if (in_vocab.count(tok)) continue;
      if (!best || f > best_freq || (f == best_freq && tok < best_token)) {
        best = &pair;
        best_freq = f;
        best_token = std::move(tok);
      }
    }
    if (!best || best_freq < min_freq) break;

    const auto [a, b] = *best;
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.pieces.size());
      for (std::size_t i = 0; i < w.pieces.size(); ++i) {
        if (i + 1 < w.pieces.size() && w.pieces[i] == a && w.pieces[i + 1] == b) {
          next.push_back(best_token);
          ++i;
        } else {
          next.push_back(w.pieces[i]);
        }
      }
      w.pieces = std::move(next);
    }
    in_vocab.emplace(best_token, best_freq);
  }

  std::vector<std::pair<std::string, std::size_t>> ordered(in_vocab.begin(), in_vocab.end());
  std::sort(ordered.begin(), ordered.end(), by_freq);
  std::vector<std::string> tokens = Vocabulary().tokens();
  for (auto& [t, f] : ordered) tokens.push_back(t);
  return Vocabulary::from_tokens(tokens);
}

struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> mask;
  int true_length = 0;

  std::size_t max_len() const { return ids.size(); }
};

inline constexpr std::size_t kMaxCharsPerWord = 100;

// Greedy longest-match segmentation of one pre-tokenized word. A code point
// no vocabulary piece covers becomes [UNK] and matching resumes after it.
inline std::vector<int> wordpiece(const std::u32string& word, const Vocabulary& vocab) {
  if (word.size() > kMaxCharsPerWord) return {Vocabulary::kUnk};
  std::vector<int> out;
  std::size_t start = 0;
  while (start < word.size()) {
    std::optional<int> found;
    std::size_t end = word.size();
    for (; end > start; --end) {
      std::string piece = start == 0 ? std::string() : std::string(kContinuation);
      piece += utf8::encode(std::u32string_view(word).substr(start, end - start));
      if ((found = vocab.id(piece))) break;
    }
    if (found) {
      out.push_back(*found);
      start = end;
    } else {
      out.push_back(Vocabulary::kUnk);
      ++start;
    }
  }
  return out;
}

inline TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len = 64) {
  if (max_len < 3) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 3");
  std::vector<int> pieces;
  for (const auto& w : pre_tokenize(text)) {
    auto ids = wordpiece(w, vocab);
    pieces.insert(pieces.end(), ids.begin(), ids.end());
    if (pieces.size() >= max_len - 2) break;
  }
  if (pieces.size() > max_len - 2) pieces.resize(max_len - 2);

  TokenSequence seq;
  seq.ids.assign(max_len, Vocabulary::kPad);
  seq.mask.assign(max_len, 0);
  seq.ids[0] = Vocabulary::kCls;
  std::copy(pieces.begin(), pieces.end(), seq.ids.begin() + 1);
  seq.true_length = static_cast<int>(pieces.size()) + 2;
  seq.ids[seq.true_length - 1] = Vocabulary::kSep;
  std::fill(seq.mask.begin(), seq.mask.begin() + seq.true_length, 1);
  return seq;
}

// Joins pieces back into text: "##" pieces attach to the previous piece,
// specials are skipped.
inline std::string decode(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (Vocabulary::is_special(id) && id != Vocabulary::kUnk) continue;
    const auto& t = vocab.token(id);
    if (t.rfind(kContinuation, 0) == 0) {
      out += t.substr(kContinuation.size());
    } else {
      if (!out.empty()) out.push_back(' ');
      out += t;
    }
  }
  return out;
}

}  // namespace taskrisk
