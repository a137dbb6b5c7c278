#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coeval::partition {

class PartitionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ManifestItem {
  std::string item_id;
  std::uint32_t stratum = 1;  // 1..K
};

struct BenchmarkManifest {
  std::string benchmark_id;
  std::uint32_t strata = 1;  // K
  std::vector<ManifestItem> items;

  void validate() const;
  // Item counts per stratum, index 0 holding stratum 1.
  std::vector<std::size_t> stratum_sizes() const;
};

struct PartitionAssignment {
  std::size_t subsets_n = 0;  // N
  std::size_t rho = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> subsets;
};

// Per stratum: shuffle with xoshiro256** keyed by (seed, stratum), then walk a
// cursor c from 0, placing each item in subsets c, c+1, ..., c+rho-1 (mod N)
// and advancing c by rho.
PartitionAssignment partition(const BenchmarkManifest& manifest, std::size_t n, std::size_t rho, std::uint64_t seed);

struct BalanceReport {
  std::vector<std::vector<std::size_t>> counts;  // [subset][stratum - 1]
  std::vector<std::vector<double>> proportions;  // share of each stratum inside each subset
  std::vector<double> global_proportions;        // share of each stratum in the manifest
  double max_abs_deviation = 0.0;                // max |count - |L_k| * rho / N|
  double max_prop_deviation = 0.0;               // max |proportion - global proportion|
  bool coverage_ok = true;                       // every item in exactly rho distinct subsets
};

BalanceReport check_balance(const PartitionAssignment& assignment, const BenchmarkManifest& manifest);

BenchmarkManifest parse_manifest(std::string_view json_text);
std::string manifest_to_json(const BenchmarkManifest& manifest);
PartitionAssignment parse_assignment(std::string_view json_text);
std::string assignment_to_json(const PartitionAssignment& assignment);
std::string balance_to_json(const BalanceReport& report);

// Synthetic manifest: item i (0-based) gets stratum (i mod K) + 1.
BenchmarkManifest synthetic_manifest(std::string benchmark_id, std::size_t items, std::uint32_t strata);

}  // namespace coeval::partition
