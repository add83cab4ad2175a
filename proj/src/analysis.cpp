#include "rcsim/analysis.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rcsim {

double evict_probability(double n_lines, double group_size) {
  if (n_lines < 1 || group_size < 0)
    throw std::invalid_argument("evict_probability: need N >= 1, g >= 0");
  // 1 - (1 - 1/N)^g via expm1/log1p to stay exact for tiny 1/N.
  return -std::expm1(group_size * std::log1p(-1.0 / n_lines));
}

double poisson_point(double lambda, std::uint32_t k) {
  if (lambda <= 0)
    throw std::invalid_argument("poisson: lambda must be positive");
  return std::exp(double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1));
}

double poisson_tail(double lambda, std::uint32_t k) {
  if (lambda <= 0)
    throw std::invalid_argument("poisson: lambda must be positive");
  if (k == 0)
    return 1.0;
  // Sum upward from the first term until the additions vanish.
  double term = poisson_point(lambda, k);
  double sum = term;
  for (std::uint32_t i = k; i < k + 4096; ++i) {
    term *= lambda / double(i + 1);
    const double next = sum + term;
    if (next == sum)
      break;
    sum = next;
  }
  return std::min(sum, 1.0);
}

double poisson_oversubscribed(double lambda, std::uint32_t k, double table_entries,
                              bool tail) {
  const double p = tail ? poisson_tail(lambda, k) : poisson_point(lambda, k);
  return p * table_entries;
}

std::uint64_t min_scg_size_drs(std::uint64_t skews, std::uint64_t assoc) {
  if (skews < 1 || assoc < 1)
    throw std::invalid_argument("min_scg_size_drs: s, w >= 1");
  return skews * assoc;
}

std::uint64_t ceaser_s_epoch_bound(std::uint64_t assoc, std::uint64_t skews) {
  if (skews < 1 || assoc < 1)
    throw std::invalid_argument("ceaser_s_epoch_bound: s, w >= 1");
  return assoc * skews;
}

double attack_cost(AttackCostModel model, const AttackCostParams& p) {
  switch (model) {
  case AttackCostModel::arithmetic:
    if (p.start_size <= 0)
      throw std::invalid_argument("attack_cost: start_size required");
    return p.start_size * (p.start_size + 1) / 2;
  case AttackCostModel::geometric:
    if (p.start_size <= 0 || p.fraction <= 0 || p.fraction >= 1)
      throw std::invalid_argument("attack_cost: need start_size and 0 < fraction < 1");
    return p.start_size / (1 - p.fraction);
  case AttackCostModel::builder:
    if (p.n_lines <= 0 || p.assoc <= 0)
      throw std::invalid_argument("attack_cost: need n_lines and assoc");
    return p.n_lines * p.assoc;
  case AttackCostModel::fast_builder:
    if (p.start_size <= 0 || p.assoc <= 0)
      throw std::invalid_argument("attack_cost: need start_size and assoc");
    return p.assoc * p.start_size;
  case AttackCostModel::drs_builder:
    if (p.n_lines <= 0 || p.assoc <= 0 || p.skews <= 0)
      throw std::invalid_argument("attack_cost: need n_lines, assoc and skews");
    return p.n_lines * p.skews * p.assoc;
  }
  throw std::invalid_argument("attack_cost: unknown model");
}

StorageOverhead storage_overhead_bits(std::uint64_t n_sets, std::uint64_t n_lines) {
  if (n_sets == 0 || n_lines == 0 || (n_sets & (n_sets - 1)) || (n_lines & (n_lines - 1)))
    throw std::invalid_argument("storage_overhead_bits: powers of two required");
  const auto log_s = std::uint32_t(std::bit_width(n_sets) - 1);
  const auto log_n = std::uint32_t(std::bit_width(n_lines) - 1);
  StorageOverhead o;
  o.bits_per_line = 2 * log_s + 1 + log_n;
  o.ratio_vs_550bit_line = double(o.bits_per_line) / 550.0;
  return o;
}

std::vector<std::pair<std::string, std::string>> analysis_table(const AnalysisParams& p) {
  std::vector<std::pair<std::string, std::string>> rows;
  char buf[128];
  auto add = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    rows.emplace_back(name, buf);
  };
  add("evict_probability(N,g)", evict_probability(double(p.n_lines), double(p.group_size)));
  add("survival_probability(N,g)",
      1.0 - evict_probability(double(p.n_lines), double(p.group_size)));
  add("poisson_oversubscribed_tail(lambda,k,T)",
      poisson_oversubscribed(p.load, p.oversub_k, double(p.table_entries), true));
  add("poisson_oversubscribed_point(lambda,k,T)",
      poisson_oversubscribed(p.load, p.oversub_k, double(p.table_entries), false));
  add("min_scg_size_drs(s,w)", double(min_scg_size_drs(p.n_skews, p.assoc)));
  add("ceaser_s_epoch_bound(w,s)", double(ceaser_s_epoch_bound(p.assoc, p.n_skews)));
  AttackCostParams cp;
  cp.n_lines = double(p.n_lines);
  cp.assoc = double(p.assoc);
  cp.skews = double(p.n_skews);
  cp.start_size = double(p.start_size);
  cp.fraction = p.fraction;
  add("attack_cost(arithmetic)", attack_cost(AttackCostModel::arithmetic, cp));
  add("attack_cost(geometric)", attack_cost(AttackCostModel::geometric, cp));
  add("attack_cost(builder)", attack_cost(AttackCostModel::builder, cp));
  add("attack_cost(fast_builder)", attack_cost(AttackCostModel::fast_builder, cp));
  add("attack_cost(drs_builder)", attack_cost(AttackCostModel::drs_builder, cp));
  const auto ov = storage_overhead_bits(p.n_sets, p.n_lines);
  add("storage_overhead_bits_per_line", double(ov.bits_per_line));
  add("storage_overhead_vs_550bit_line", ov.ratio_vs_550bit_line);
  return rows;
}

} // namespace rcsim
