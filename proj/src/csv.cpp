#include "coeval/csv.hpp"

#include <charconv>
#include <cmath>
#include <optional>

namespace coeval::csv {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw CsvError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_record(std::string_view line, std::size_t lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == ',') {
      fields.emplace_back();
      was_quoted = false;
    } else if (c == '"') {
      if (!fields.back().empty() || was_quoted) fail(lineno, "stray quote");
      quoted = was_quoted = true;
    } else {
      if (was_quoted) fail(lineno, "text after closing quote");
      fields.back() += c;
    }
  }
  if (quoted) fail(lineno, "unterminated quote");
  return fields;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw CsvError("missing column '" + std::string(name) + "'");
}

Table parse(std::string_view text) {
  Table t;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto fields = split_record(line, lineno);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      fail(lineno, "expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw CsvError("empty input: no header row");
  return t;
}

double parse_number(const std::string& field, std::size_t line, std::string_view column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || field.empty() || !std::isfinite(v)) {
    fail(line, std::string(column) + ": not a number: '" + field + "'");
  }
  return v;
}

std::vector<stats::ScoreSample> read_score_samples(std::string_view text) {
  const Table t = parse(text);
  const std::size_t score = t.column("score");
  std::size_t node = t.column("node_id");
  std::size_t task = t.column("task_id");
  std::optional<std::size_t> config;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == "config_id") config = i;
  }
  std::vector<stats::ScoreSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    // Row numbers count the header as line 1.
    stats::ScoreSample s;
    s.score = parse_number(row[score], r + 2, "score");
    if (!(s.score >= 0.0 && s.score <= 100.0)) fail(r + 2, "score outside [0, 100]");
    s.node_id = row[node];
    s.task_id = row[task];
    s.config_id = config ? row[*config] : "";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<NodeScore> read_node_scores(std::string_view text) {
  const Table t = parse(text);
  const std::size_t node = t.column("node_id");
  const std::size_t score = t.column("score");
  std::vector<NodeScore> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({t.rows[r][node], parse_number(t.rows[r][score], r + 2, "score")});
  }
  return out;
}

}  // namespace coeval::csv
