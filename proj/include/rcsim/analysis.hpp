#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rcsim {

// Eviction probability of a random g-line group against N randomly mapped
// lines: 1 - (1 - 1/N)^g. The complement is the target's survival chance.
double evict_probability(double n_lines, double group_size);

// Poisson helpers, numerically stable for lambda <= 64, k <= 256.
double poisson_point(double lambda, std::uint32_t k);  // P[X = k]
double poisson_tail(double lambda, std::uint32_t k);   // P[X >= k]

// Expected number of table entries with at least (tail convention) or
// exactly (point convention) k mapped lines at load lambda.
double poisson_oversubscribed(double lambda, std::uint32_t k, double table_entries,
                              bool tail = true);

// Minimum conflict-group size with a useful eviction chance on a skewed
// cache: s * w.
std::uint64_t min_scg_size_drs(std::uint64_t skews, std::uint64_t assoc);

// Epoch multiple k (E = k * N) at which the builder attack completes in
// expectation against DRS+DE: k = w * s. Safety division is the caller's.
std::uint64_t ceaser_s_epoch_bound(std::uint64_t assoc, std::uint64_t skews);

enum class AttackCostModel { arithmetic, geometric, builder, fast_builder, drs_builder };

struct AttackCostParams {
  double n_lines = 0;   // N
  double assoc = 0;     // w
  double skews = 0;     // s
  double start_size = 0; // L
  double fraction = 0;  // f
};

// Expected access counts for the attack strategies:
//   arithmetic  : L(L+1)/2        geometric : L/(1-f)
//   builder     : N*w             fast_builder : w*L
//   drs_builder : N*s*w
double attack_cost(AttackCostModel model, const AttackCostParams& p);

struct StorageOverhead {
  std::uint32_t bits_per_line = 0;
  double ratio_vs_550bit_line = 0;
};

// Per-line cost of the indirection scheme: 2*log2(S) + 1 + log2(N) bits.
StorageOverhead storage_overhead_bits(std::uint64_t n_sets, std::uint64_t n_lines);

struct AnalysisParams {
  std::uint64_t n_lines = 32768;
  std::uint64_t n_sets = 2048;
  std::uint64_t assoc = 16;
  std::uint64_t n_skews = 2;
  std::uint64_t group_size = 1000;
  std::uint64_t start_size = 1024;
  double fraction = 0.5;
  double load = 2.0;
  std::uint32_t oversub_k = 9;
  std::uint64_t table_entries = 32768;
};

// One row per formula; the analyze CLI prints these.
std::vector<std::pair<std::string, std::string>> analysis_table(const AnalysisParams& p);

} // namespace rcsim
