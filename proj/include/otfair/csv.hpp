#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "otfair/error.hpp"

namespace otfair {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based physical line on which each row starts.
  std::vector<std::size_t> lines;
};

/// RFC 4180: comma separated, double-quoted fields with "" escapes, CRLF or
/// LF record ends. Quoted fields may span lines. Blank lines are skipped.
inline CsvTable parse_csv(std::string_view text, const std::string& source = "<csv>") {
  CsvTable t;
  std::vector<std::string> rec;
  std::string field;
  std::size_t line = 1, rec_line = 1;
  bool quoted = false, was_quoted = false, any = false;

  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.size() == 1 && rec[0].empty() && !any)) {
      if (t.header.empty() && t.rows.empty() && t.lines.empty()) {
        t.header = std::move(rec);
        t.lines.push_back(rec_line);
      } else {
        if (rec.size() != t.header.size())
          throw InputError("ingest", source + ":" + std::to_string(rec_line) + ": expected " +
                                         std::to_string(t.header.size()) + " fields, found " +
                                         std::to_string(rec.size()));
        t.rows.push_back(std::move(rec));
        t.lines.push_back(rec_line);
      }
    }
    rec.clear();
    any = false;
  };

  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || was_quoted)
          throw InputError("ingest", source + ":" + std::to_string(line) + ": stray quote inside unquoted field");
        quoted = was_quoted = any = true;
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\r':
        if (k + 1 < text.size() && text[k + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        rec_line = ++line;
        break;
      default:
        if (was_quoted)
          throw InputError("ingest", source + ":" + std::to_string(line) + ": text after closing quote");
        field += c;
        any = true;
    }
  }
  if (quoted) throw InputError("ingest", source + ": unterminated quoted field starting on line " +
                                             std::to_string(rec_line));
  if (any || !field.empty()) end_record();
  if (t.header.empty()) throw InputError("ingest", source + ": missing header row");
  t.lines.erase(t.lines.begin());
  return t;
}

inline std::string read_text_file(const std::filesystem::path& path, const std::string& module = "ingest") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(module, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.string());
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) os << ',';
    os << csv_escape(fields[k]);
  }
  os << '\n';
}

}  // namespace otfair
