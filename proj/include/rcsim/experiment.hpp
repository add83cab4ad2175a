#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcsim/attacks.hpp"
#include "rcsim/config.hpp"
#include "rcsim/scheme.hpp"
#include "rcsim/trace.hpp"

namespace rcsim {

enum class WorkloadType { trace, attack };

enum class AttackKind {
  simple_reduction,
  fractional_reduction,
  builder,
  fast_builder,
  oversubscription,
  itable_oversubscription,
  verify_random, // eviction probability of fresh random groups
};

const char* to_string(AttackKind k);
std::optional<AttackKind> attack_kind_from_string(const std::string& name);

struct WorkloadSpec {
  WorkloadType type = WorkloadType::trace;
  TraceSource trace;

  AttackKind attack = AttackKind::builder;
  std::uint64_t start_size = 0;      // L for reductions / fast_builder
  double fraction = 0.5;             // f
  std::uint64_t scg_target_size = 0; // builder goal (0 -> assoc)
  std::uint64_t group_size = 0;      // verify_random g
  std::uint64_t budget = 0;          // oracle accesses, 0 -> per-attack default
  std::uint64_t warmup_accesses = 0; // victim traffic before the attack
  std::uint32_t batch = 1;
  std::uint32_t passes = 3;
  std::uint32_t verify_trials = 16;
  std::uint64_t span_lines = 1ull << 40;
};

struct ExperimentSpec {
  std::uint64_t seed = 1;
  std::uint32_t trials = 1;
  std::uint32_t jobs = 1; // worker threads; results are merged by trial index
  SchemeConfig scheme;
  WorkloadSpec workload;
  std::string out_path; // empty: no file written

  void validate() const;
};

struct TrialResult {
  std::uint32_t trial = 0;
  SchemeStats scheme_stats;
  AttackResult attack;
  double miss_rate = 0;
};

struct RunStats {
  std::vector<TrialResult> trials;
  double mean_miss_rate = 0;
  double ci95_miss_rate = 0;
  double success_rate = 0;
  double mean_eviction_probability = 0;
  double mean_accesses_used = 0;
  std::string csv; // exact bytes written to out_path
};

RunStats run(const ExperimentSpec& spec);

// One run() per value of the swept parameter; returns the combined CSV.
std::string sweep(const ExperimentSpec& base, const std::string& axis,
                  const std::vector<std::string>& values);

// Apply "section.key" values onto a spec (file first, then flag overrides).
ExperimentSpec spec_from_config(const KvConfig& cfg);
void apply_config(ExperimentSpec& spec, const KvConfig& cfg);

} // namespace rcsim
