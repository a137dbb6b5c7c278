#include "coeval/partition.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "coeval/rng.hpp"

namespace coeval::partition {

using nlohmann::json;

void BenchmarkManifest::validate() const {
  if (items.empty()) throw PartitionError("manifest has no items");
  if (strata < 1) throw PartitionError("manifest needs at least one stratum");
  std::set<std::string_view> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.item_id).second) throw PartitionError("duplicate item id '" + item.item_id + "'");
    if (item.stratum < 1 || item.stratum > strata) {
      throw PartitionError("item '" + item.item_id + "' has stratum outside 1.." + std::to_string(strata));
    }
  }
}

std::vector<std::size_t> BenchmarkManifest::stratum_sizes() const {
  std::vector<std::size_t> sizes(strata, 0);
  for (const auto& item : items) ++sizes[item.stratum - 1];
  return sizes;
}

PartitionAssignment partition(const BenchmarkManifest& manifest, std::size_t n, std::size_t rho, std::uint64_t seed) {
  if (n < 1) throw PartitionError("N must be at least 1");
  if (rho < 1) throw PartitionError("rho must be at least 1");
  if (rho > n) throw PartitionError("infeasible redundancy: rho exceeds N");
  manifest.validate();

  std::vector<std::vector<std::string>> by_stratum(manifest.strata);
  for (const auto& item : manifest.items) by_stratum[item.stratum - 1].push_back(item.item_id);

  PartitionAssignment out{n, rho, seed, std::vector<std::vector<std::string>>(n)};
  for (std::uint32_t k = 0; k < manifest.strata; ++k) {
    auto& items = by_stratum[k];
    Xoshiro256 rng(derive_seed(seed, {k + 1}));
    shuffle(items, rng);
    std::size_t cursor = 0;
    for (const auto& id : items) {
      for (std::size_t r = 0; r < rho; ++r) out.subsets[(cursor + r) % n].push_back(id);
      cursor += rho;
    }
  }
  return out;
}

BalanceReport check_balance(const PartitionAssignment& assignment, const BenchmarkManifest& manifest) {
  manifest.validate();
  if (assignment.subsets.size() != assignment.subsets_n || assignment.subsets_n == 0) {
    throw PartitionError("assignment subset count does not match N");
  }
  std::unordered_map<std::string_view, std::uint32_t> stratum_of;
  for (const auto& item : manifest.items) stratum_of.emplace(item.item_id, item.stratum);

  const auto sizes = manifest.stratum_sizes();
  const double n = static_cast<double>(assignment.subsets_n);
  const double rho = static_cast<double>(assignment.rho);
  BalanceReport report;
  for (auto s : sizes) report.global_proportions.push_back(static_cast<double>(s) / manifest.items.size());

  std::unordered_map<std::string_view, std::size_t> multiplicity;
  for (const auto& subset : assignment.subsets) {
    std::vector<std::size_t> counts(manifest.strata, 0);
    std::set<std::string_view> in_subset;
    for (const auto& id : subset) {
      auto it = stratum_of.find(id);
      if (it == stratum_of.end()) throw PartitionError("assignment references unknown item '" + id + "'");
      ++counts[it->second - 1];
      if (!in_subset.insert(id).second) report.coverage_ok = false;
      ++multiplicity[id];
    }
    std::vector<double> props;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const double expected = static_cast<double>(sizes[k]) * rho / n;
      report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(counts[k] - expected));
      const double p = subset.empty() ? 0.0 : static_cast<double>(counts[k]) / subset.size();
      props.push_back(p);
      if (!subset.empty()) {
        report.max_prop_deviation = std::max(report.max_prop_deviation, std::abs(p - report.global_proportions[k]));
      }
    }
    report.counts.push_back(std::move(counts));
    report.proportions.push_back(std::move(props));
  }
  for (const auto& item : manifest.items) {
    if (multiplicity[item.item_id] != assignment.rho) report.coverage_ok = false;
  }
  return report;
}

BenchmarkManifest parse_manifest(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw PartitionError(std::string("manifest is not valid JSON: ") + e.what());
  }
  BenchmarkManifest m;
  try {
    m.benchmark_id = j.at("benchmark_id").get<std::string>();
    m.strata = j.at("K").get<std::uint32_t>();
    const auto& items = j.at("items");
    for (std::size_t i = 0; i < items.size(); ++i) {
      m.items.push_back({items[i].at("item_id").get<std::string>(), items[i].at("stratum").get<std::uint32_t>()});
    }
  } catch (const json::exception& e) {
    throw PartitionError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

std::string manifest_to_json(const BenchmarkManifest& manifest) {
  nlohmann::ordered_json j;
  j["benchmark_id"] = manifest.benchmark_id;
  j["K"] = manifest.strata;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& item : manifest.items) {
    j["items"].push_back({{"item_id", item.item_id}, {"stratum", item.stratum}});
  }
  return j.dump(2);
}

PartitionAssignment parse_assignment(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    PartitionAssignment a;
    a.subsets_n = j.at("N").get<std::size_t>();
    a.rho = j.at("rho").get<std::size_t>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.subsets = j.at("subsets").get<std::vector<std::vector<std::string>>>();
    return a;
  } catch (const json::exception& e) {
    throw PartitionError(std::string("malformed assignment: ") + e.what());
  }
}

std::string assignment_to_json(const PartitionAssignment& assignment) {
  nlohmann::ordered_json j;
  j["N"] = assignment.subsets_n;
  j["rho"] = assignment.rho;
  j["seed"] = assignment.seed;
  j["subsets"] = assignment.subsets;
  return j.dump(2);
}

std::string balance_to_json(const BalanceReport& report) {
  nlohmann::ordered_json j;
  j["coverage_ok"] = report.coverage_ok;
  j["max_abs_deviation"] = report.max_abs_deviation;
  j["max_prop_deviation"] = report.max_prop_deviation;
  j["global_proportions"] = report.global_proportions;
  j["counts"] = report.counts;
  j["proportions"] = report.proportions;
  return j.dump(2);
}

BenchmarkManifest synthetic_manifest(std::string benchmark_id, std::size_t items, std::uint32_t strata) {
  if (strata < 1) throw PartitionError("need at least one stratum");
  BenchmarkManifest m{std::move(benchmark_id), strata, {}};
  char num[24];
  for (std::size_t i = 0; i < items; ++i) {
    std::snprintf(num, sizeof num, "-%05zu", i);
    m.items.push_back({m.benchmark_id + num, static_cast<std::uint32_t>(i % strata) + 1});
  }
  return m;
}

}  // namespace coeval::partition
