#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coeval/stats.hpp"

namespace coeval::csv {

class CsvError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws CsvError when absent.
  std::size_t column(std::string_view name) const;
};

// Comma-separated with an optional double-quote escape (""). Blank lines are
// skipped; every row must have as many fields as the header. Errors carry the
// 1-based line number.
Table parse(std::string_view text);

// Strict decimal parse of a whole field.
double parse_number(const std::string& field, std::size_t line, std::string_view column);

// score,node_id,task_id,config_id (extra columns ignored). config_id may be missing.
std::vector<stats::ScoreSample> read_score_samples(std::string_view text);

struct NodeScore {
  std::string node_id;
  double score = 0.0;
};
// node_id,score
std::vector<NodeScore> read_node_scores(std::string_view text);

}  // namespace coeval::csv
