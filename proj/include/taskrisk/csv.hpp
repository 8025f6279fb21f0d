// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "taskrisk/core.hpp"

namespace taskrisk::csv {

// A parsed RFC-4180 table. `rows` excludes the header line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t column(std::string_view name, std::string_view source = "csv") const {
    if (auto i = find_column(name)) return *i;
    throw Error(ErrorCode::MissingColumn,
                std::string(source) + ": missing column '" + std::string(name) + "'");
  }
};

inline std::vector<std::vector<std::string>> parse_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool was_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  // Skip a UTF-8 byte-order mark.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || was_quoted)
          throw Error(ErrorCode::MalformedCsv,
                      "stray quote on line " + std::to_string(line));
        in_quotes = true;
        was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted)
          throw Error(ErrorCode::MalformedCsv,
                      "text after closing quote on line " + std::to_string(line));
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field");
  if (field_started || was_quoted || !record.empty()) end_record();
  return records;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Table parse(std::string_view text) {
  auto records = parse_records(text);
  Table t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  for (auto& h : t.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    // Blank lines carry no data.
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != t.header.size())
      throw Error(ErrorCode::MalformedCsv,
                  "row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(rec));
  }
  return t;
}

inline Table read(const std::filesystem::path& path) { return parse(read_file(path)); }

inline std::string escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Buffers rows and writes with LF line endings.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header) { row(header); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(fields[i]);
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f << out_.str();
  }

 private:
  std::ostringstream out_;
};

}  // namespace taskrisk::csv
