#pragma once

#include <cstdint>
#include <vector>

#include "rcsim/rng.hpp"
#include "rcsim/scheme.hpp"

namespace rcsim {

// Everything an attack may observe: per-access hit/miss, nothing else.
class AttackerOracle {
public:
  AttackerOracle(Scheme& scheme, Address target)
      : scheme_(scheme), target_(target) {}

  // True on a miss. Misses refetch, as a real access would.
  bool access(Address a) {
    ++count_;
    scheme_.access(a, Owner::attacker, scratch_);
    return !scratch_.hit;
  }

  // True if the target had been evicted; the probe reinstalls it.
  bool probe_target() { return access(target_); }

  Address target() const { return target_; }
  std::uint64_t accesses() const { return count_; }

private:
  Scheme& scheme_;
  Address target_;
  std::uint64_t count_ = 0;
  AccessOutcome scratch_;
};

struct ConflictGroup {
  std::vector<Address> members;
  Address target = 0;
};

struct AttackResult {
  bool succeeded = false;
  ConflictGroup scg;
  std::uint64_t accesses_used = 0;
  std::uint64_t stream_accesses = 0; // candidate stream only, probes excluded
  std::uint64_t evictions_observed = 0;
  std::uint64_t epochs_elapsed = 0; // filled by the harness from scheme stats
  double eviction_probability = -1.0;
  double control_probability = -1.0; // ambient eviction over the same time
};

// Attacker-side knowledge: the published cache parameters.
struct AttackParams {
  CacheGeometry geo;
  std::uint64_t table_entries = 0;      // T, for the oversubscription attacks
  std::uint64_t span_lines = 1ull << 40; // address space candidates come from
  bool first_level_index_bits = false;  // entry mates constructible by address
};

inline Address draw_line(RngStream& rng, std::uint64_t span_lines,
                         std::uint32_t offset_bits) {
  return rng.uniform(span_lines) << offset_bits;
}

// Fraction of {install target; load group to quiescence; probe target}
// trials where the probe missed. A true conflict set on a static scheme
// reaches 1.0: once the group is co-resident it owns the whole set.
double verify_scg(AttackerOracle& oracle, const std::vector<Address>& members,
                  std::uint32_t trials, std::uint32_t passes_cap = 16);

// Eviction probability of a fresh random g-line group, redrawn per trial so
// every load is a genuine fill (matches the random-placement analysis).
double verify_random_groups(AttackerOracle& oracle, std::uint64_t group_size,
                            std::uint32_t trials, RngStream& rng,
                            std::uint64_t span_lines, std::uint32_t offset_bits);

// One-shot measurement per trial on a residency-cleared copy of the scheme:
// warm with junk, install the target, load the group once, probe. This is
// the "one measurement per SCG" discipline; reloading a resident group
// reveals nothing.
double cold_verify_scg(const Scheme& scheme, const ConflictGroup& group,
                       std::uint32_t trials, std::uint64_t warm_accesses,
                       RngStream& rng, std::uint64_t span_lines);

// Remove one line at a time, keeping a removal only while the rest of the
// group still evicts the target. Theta(L^2) accesses.
AttackResult simple_reduction(AttackerOracle& oracle, std::uint64_t start_size,
                              RngStream& rng, const AttackParams& params,
                              std::uint64_t budget = 0);

// Keep a random f-fraction per round; restore and re-split when the signal
// is lost. Group loads sum to a geometric series <= L/(1-f).
AttackResult fractional_reduction(AttackerOracle& oracle, std::uint64_t start_size,
                                  double fraction, RngStream& rng,
                                  const AttackParams& params,
                                  std::uint64_t budget = 0);

// Stream candidates, probing the target; a candidate whose access coincides
// with a target eviction joins the group. batch > 1 amortizes probes at the
// price of admitting the whole batch on each hit.
AttackResult builder(AttackerOracle& oracle, std::uint64_t scg_target_size,
                     RngStream& rng, const AttackParams& params,
                     std::uint64_t budget = 0, std::uint32_t batch = 1,
                     std::uint32_t verify_trials = 16);

// Reload an L-line group, harvesting lines that miss on later passes (they
// were evicted, so they contend); the batch rolls fresh candidates in while
// keeping harvested members.
AttackResult fast_builder(AttackerOracle& oracle, std::uint64_t start_size,
                          RngStream& rng, const AttackParams& params,
                          std::uint64_t budget = 0, std::uint32_t passes = 3,
                          std::uint32_t verify_trials = 16,
                          std::uint32_t detections_needed = 3);

// Build a group sharing the target's iTable entry. With a known index-bit
// first level the mates are constructed arithmetically; otherwise they are
// discovered by exact co-eviction (a grouped eviction removes the whole
// entry, so target and mate vanish on the same fill).
AttackResult oversubscription_attack(AttackerOracle& oracle, RngStream& rng,
                                     const AttackParams& params,
                                     std::uint64_t budget = 0);

// The reduction-flavored variant against the rotating DE layer: bootstrap a
// large conflict group, then distill entry-mates by co-eviction streaks.
// Degenerates to oversubscription_attack when the first level is static.
AttackResult itable_oversubscription_attack(AttackerOracle& oracle, RngStream& rng,
                                            const AttackParams& params,
                                            std::uint64_t budget = 0,
                                            std::uint64_t start_size = 0);

} // namespace rcsim
