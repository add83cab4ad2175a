#include "rcsim/attacks.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace rcsim {

namespace {

constexpr double kVerifyThreshold = 0.5;

std::vector<Address> draw_distinct(RngStream& rng, std::uint64_t count,
                                   const AttackParams& p, Address exclude) {
  std::unordered_set<Address> seen;
  std::vector<Address> lines;
  lines.reserve(count);
  while (lines.size() < count) {
    const Address a = draw_line(rng, p.span_lines, p.geo.offset_bits);
    if (a == exclude || !seen.insert(a).second)
      continue;
    lines.push_back(a);
  }
  return lines;
}

struct Budget {
  AttackerOracle& oracle;
  std::uint64_t start;
  std::uint64_t limit; // absolute access count, 0 = unlimited

  explicit Budget(AttackerOracle& o, std::uint64_t budget)
      : oracle(o), start(o.accesses()),
        limit(budget == 0 ? 0 : o.accesses() + budget) {}
  bool exhausted() const { return limit != 0 && oracle.accesses() >= limit; }
  std::uint64_t used() const { return oracle.accesses() - start; }
};

void finalize(AttackResult& r, const Budget& b) { r.accesses_used = b.used(); }

} // namespace

double verify_scg(AttackerOracle& oracle, const std::vector<Address>& members,
                  std::uint32_t trials, std::uint32_t passes_cap) {
  std::uint64_t misses = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    oracle.access(oracle.target());
    for (std::uint32_t p = 0; p < passes_cap; ++p) {
      bool any_miss = false;
      for (const Address a : members)
        any_miss |= oracle.access(a);
      if (!any_miss)
        break;
    }
    if (oracle.probe_target())
      ++misses;
  }
  return trials == 0 ? 0.0 : double(misses) / double(trials);
}

double verify_random_groups(AttackerOracle& oracle, std::uint64_t group_size,
                            std::uint32_t trials, RngStream& rng,
                            std::uint64_t span_lines, std::uint32_t offset_bits) {
  std::uint64_t misses = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    oracle.access(oracle.target());
    for (std::uint64_t i = 0; i < group_size; ++i)
      oracle.access(draw_line(rng, span_lines, offset_bits));
    if (oracle.probe_target())
      ++misses;
  }
  return trials == 0 ? 0.0 : double(misses) / double(trials);
}

double cold_verify_scg(const Scheme& scheme, const ConflictGroup& group,
                       std::uint32_t trials, std::uint64_t warm_accesses,
                       RngStream& rng, std::uint64_t span_lines) {
  std::uint64_t misses = 0;
  const std::uint32_t offset_bits = scheme.geometry().offset_bits;
  for (std::uint32_t t = 0; t < trials; ++t) {
    auto cold = scheme.clone_cold(rng.next());
    AttackerOracle o(*cold, group.target);
    for (std::uint64_t i = 0; i < warm_accesses; ++i)
      o.access(draw_line(rng, span_lines, offset_bits));
    o.access(group.target);
    for (const Address a : group.members)
      o.access(a);
    if (o.probe_target())
      ++misses;
  }
  return trials == 0 ? 0.0 : double(misses) / double(trials);
}

// ---------------------------------------------------------------------------
// Group reduction
//
// Random replacement makes one load round an unreliable witness, and lines
// dropped from the group linger in the cache, keeping the target's set
// contended for a while. The round structure below deals with both:
//   - settle rounds let that residue drain (it is never reloaded, so the
//     churn flushes it out);
//   - a fully quiet round (every access hits) proves the working group
//     co-resides with the target, which under a static mapping is absorbing:
//     no conflict, definitively;
//   - repeated target evictions in the decision rounds mean the group still
//     oversubscribes the target's set.

namespace {

enum class TestVerdict { conflict, no_conflict };

TestVerdict conflict_test(AttackerOracle& oracle, const std::vector<Address>& group,
                          const std::vector<bool>* active, std::size_t skip,
                          std::uint32_t settle_rounds, std::uint32_t decision_rounds,
                          std::uint32_t misses_to_confirm, Budget& budget,
                          AttackResult& res) {
  std::uint32_t probe_misses = 0;
  for (std::uint32_t r = 0; r < settle_rounds + decision_rounds; ++r) {
    bool quiet = !oracle.access(oracle.target());
    for (std::size_t i = 0; i < group.size(); ++i)
      if ((!active || (*active)[i]) && i != skip) {
        quiet &= !oracle.access(group[i]);
        ++res.stream_accesses;
      }
    const bool probe_miss = oracle.probe_target();
    quiet &= !probe_miss;
    if (probe_miss)
      ++res.evictions_observed;
    if (quiet)
      return TestVerdict::no_conflict; // co-resident, absorbing
    if (r >= settle_rounds && probe_miss && ++probe_misses >= misses_to_confirm)
      return TestVerdict::conflict;
    if (budget.exhausted())
      return TestVerdict::no_conflict;
  }
  return TestVerdict::no_conflict;
}

// Eviction probability of the group next to a same-size random control group.
// The control catches schemes that evict the target all by themselves (rapid
// re-keying, relocation churn): a group only counts as an eviction set when
// it clearly beats the control.
struct VerifyOutcome {
  double group = 0;
  double control = 0; // ambient eviction over the same access count
  bool beats_control() const { return control <= 0.3 && group - control >= 0.4; }
  bool convincing() const { return group >= 0.9 && beats_control(); }
};

// Measures the group's eviction probability against a time-matched control:
// the control trials replace every group load with a hit on one dedicated
// line, so they advance the scheme's clock (key sweeps, epochs) without any
// cache pressure. Schemes that evict the target all by themselves (rapid
// re-keying) score high on both and the margin collapses.
VerifyOutcome differential_verify(AttackerOracle& oracle,
                                  const std::vector<Address>& members,
                                  std::uint32_t trials, std::uint32_t passes_cap,
                                  RngStream& rng, const AttackParams& params,
                                  const Budget& budget) {
  VerifyOutcome v;
  if (budget.limit != 0) {
    // fit both measurements into what is left
    const std::uint64_t left =
        budget.limit > oracle.accesses() ? budget.limit - oracle.accesses() : 0;
    const std::uint64_t per_trial = 2 * (2 + std::uint64_t(passes_cap) *
                                                 std::max<std::size_t>(members.size(), 1));
    trials = std::uint32_t(std::min<std::uint64_t>(trials, left / std::max<std::uint64_t>(per_trial, 1)));
  }
  if (trials == 0)
    return v;

  const Address dummy = draw_line(rng, params.span_lines, params.geo.offset_bits);
  std::uint64_t group_misses = 0, control_misses = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    // group trial
    oracle.access(oracle.target());
    std::uint64_t loads = 0;
    for (std::uint32_t p = 0; p < passes_cap; ++p) {
      bool any_miss = false;
      for (const Address a : members) {
        any_miss |= oracle.access(a);
        ++loads;
      }
      if (!any_miss)
        break;
    }
    if (oracle.probe_target())
      ++group_misses;
    // time-matched control trial
    oracle.access(oracle.target());
    for (std::uint64_t i = 0; i < loads; ++i)
      oracle.access(dummy);
    if (oracle.probe_target())
      ++control_misses;
  }
  v.group = double(group_misses) / double(trials);
  v.control = double(control_misses) / double(trials);
  return v;
}

} // namespace

AttackResult simple_reduction(AttackerOracle& oracle, std::uint64_t start_size,
                              RngStream& rng, const AttackParams& params,
                              std::uint64_t budget_in) {
  AttackResult res;
  res.scg.target = oracle.target();
  Budget budget(oracle, budget_in);
  const std::uint32_t w = params.geo.assoc;

  std::vector<Address> group = draw_distinct(rng, start_size, params, oracle.target());
  std::vector<bool> active(group.size(), true);

  // The quick per-candidate test is noisy, so removals are provisional: a
  // guard re-checks that the group still evicts, and restores the last batch
  // when it does not. The guard settles long enough for freshly removed
  // residue to drain out of the target's set.
  const std::uint32_t guard_settle = 2 * w;
  const std::uint32_t guard_decide = std::max(8u, w);
  auto guarded_alive = [&]() {
    return conflict_test(oracle, group, &active, group.size(), guard_settle,
                         guard_decide, 2, budget, res) == TestVerdict::conflict;
  };

  std::uint64_t active_count = group.size();
  bool changed = true;
  for (int pass = 0; pass < 8 && changed && !budget.exhausted(); ++pass) {
    changed = false;
    std::vector<std::size_t> batch;
    auto guard_and_settle_batch = [&]() {
      if (batch.empty())
        return;
      if (!guarded_alive()) {
        // the batch killed the conflict: restore and redo one by one
        for (const std::size_t i : batch)
          active[i] = true;
        active_count += batch.size();
        for (const std::size_t i : batch) {
          if (budget.exhausted())
            break;
          active[i] = false;
          if (!guarded_alive()) {
            active[i] = true;
          } else {
            --active_count;
            changed = true;
          }
        }
      } else {
        changed = true;
      }
      batch.clear();
    };

    for (std::size_t i = 0; i < group.size() && !budget.exhausted(); ++i) {
      if (!active[i])
        continue;
      // stragglers near the minimum need more patience than the bulk
      const bool endgame = active_count <= std::uint64_t(8) * w;
      const std::uint32_t decide = endgame ? std::max(8u, 2 * w) : 6;
      if (conflict_test(oracle, group, &active, i, 1, decide, 2, budget, res) ==
          TestVerdict::conflict) {
        active[i] = false;
        --active_count;
        batch.push_back(i);
      }
      if (batch.size() >= 8)
        guard_and_settle_batch();
    }
    guard_and_settle_batch();
  }

  for (std::size_t i = 0; i < group.size(); ++i)
    if (active[i])
      res.scg.members.push_back(group[i]);
  const auto v = differential_verify(oracle, res.scg.members, 12, 3 * w, rng, params,
                                     budget);
  res.eviction_probability = v.group;
  res.control_probability = v.control;
  res.succeeded =
      !budget.exhausted() && res.scg.members.size() <= 1000 && v.convincing();
  finalize(res, budget);
  return res;
}

AttackResult fractional_reduction(AttackerOracle& oracle, std::uint64_t start_size,
                                  double fraction, RngStream& rng,
                                  const AttackParams& params,
                                  std::uint64_t budget_in) {
  AttackResult res;
  res.scg.target = oracle.target();
  const std::uint32_t w = params.geo.assoc;
  // The contract bounds the group-load series at 4L/(1-f); give the total
  // budget (which also covers probes and verification) extra headroom.
  const auto load_bound = std::uint64_t(4.0 * double(start_size) / (1.0 - fraction));
  if (budget_in == 0)
    budget_in = 4 * load_bound;
  Budget budget(oracle, budget_in);

  std::vector<Address> group = draw_distinct(rng, start_size, params, oracle.target());
  // Mate density is w/N for random lines, so a subset below N lines cannot
  // retain a full conflict set; splitting past that only destroys the group.
  const std::uint64_t stop_size =
      std::max<std::uint64_t>({2 * w, 8, params.geo.n_lines()});

  int failed_splits = 0;
  while (failed_splits < 4 && !budget.exhausted()) {
    const auto keep_size = std::uint64_t(double(group.size()) * fraction);
    if (keep_size < stop_size)
      break;
    if (res.stream_accesses + 7 * keep_size > load_bound)
      break; // the next level would overrun the geometric-series budget
    std::vector<Address> keep = group;
    for (std::size_t i = keep.size() - 1; i > 0; --i)
      std::swap(keep[i], keep[rng.uniform(i + 1)]);
    keep.resize(keep_size);

    // Settle rounds drain the dropped chunk before deciding; on a lost
    // signal the chunk is restored and the next iteration re-splits. Near
    // the density limit the eviction signal thins out, so decisions there
    // get more rounds.
    const bool marginal = keep_size <= params.geo.n_lines() + params.geo.n_lines() / 2;
    if (conflict_test(oracle, keep, nullptr, keep.size(), 2, marginal ? 10 : 4, 2,
                      budget, res) == TestVerdict::conflict) {
      group = std::move(keep);
      failed_splits = 0;
    } else {
      ++failed_splits;
    }
    if (res.stream_accesses >= load_bound)
      break; // the paper's geometric series is spent
  }

  res.scg.members = group;
  // Stall-level groups hold a conflict set plus bystanders; one or two
  // loads exercise the conflict, and staying brief keeps the measurement
  // ahead of any key sweep.
  const auto v =
      differential_verify(oracle, res.scg.members, 8, 3, rng, params, budget);
  res.eviction_probability = v.group;
  res.control_probability = v.control;
  res.succeeded =
      res.scg.members.size() <= 1000 && v.group >= 0.75 && v.beats_control();
  finalize(res, budget);
  return res;
}

// ---------------------------------------------------------------------------
// Builders

AttackResult builder(AttackerOracle& oracle, std::uint64_t scg_target_size,
                     RngStream& rng, const AttackParams& params,
                     std::uint64_t budget_in, std::uint32_t batch,
                     std::uint32_t verify_trials) {
  AttackResult res;
  res.scg.target = oracle.target();
  if (budget_in == 0)
    budget_in = 8 * params.geo.n_lines() * scg_target_size / std::max(1u, batch);
  Budget budget(oracle, budget_in);

  std::unordered_set<Address> members;
  std::vector<Address> batch_lines;
  oracle.access(oracle.target());
  while (members.size() < scg_target_size && !budget.exhausted()) {
    batch_lines.clear();
    for (std::uint32_t i = 0; i < batch; ++i) {
      const Address c = draw_line(rng, params.span_lines, params.geo.offset_bits);
      if (c == oracle.target())
        continue;
      oracle.access(c);
      ++res.stream_accesses;
      batch_lines.push_back(c);
    }
    if (oracle.probe_target()) {
      ++res.evictions_observed;
      for (const Address c : batch_lines) {
        members.insert(c);
        if (members.size() >= scg_target_size)
          break;
      }
    }
  }

  res.scg.members.assign(members.begin(), members.end());
  const bool complete = res.scg.members.size() >= scg_target_size;
  if (verify_trials > 0)
    res.eviction_probability =
        verify_scg(oracle, res.scg.members, verify_trials, 2 * params.geo.assoc);
  res.succeeded = complete && (verify_trials == 0 ||
                               res.eviction_probability >= kVerifyThreshold);
  finalize(res, budget);
  return res;
}

AttackResult fast_builder(AttackerOracle& oracle, std::uint64_t start_size,
                          RngStream& rng, const AttackParams& params,
                          std::uint64_t budget_in, std::uint32_t passes,
                          std::uint32_t verify_trials,
                          std::uint32_t detections_needed) {
  AttackResult res;
  res.scg.target = oracle.target();
  const std::uint32_t w = params.geo.assoc;
  if (budget_in == 0)
    budget_in = 3 * std::uint64_t(w) * start_size;
  Budget budget(oracle, budget_in);

  // Reload the group in windows, probing the target at each window boundary.
  // A group line whose miss lands in a window where the target was evicted
  // is the likely evictor; repeated coincidences mark the conflict-set
  // members while capacity noise stays uncorrelated.
  const std::size_t window = 16;
  const std::uint32_t score_needed = detections_needed;
  std::unordered_map<Address, std::uint32_t> score;
  std::vector<Address> members;
  std::unordered_set<Address> member_set;
  std::vector<Address> batch = draw_distinct(rng, start_size, params, oracle.target());
  std::vector<Address> window_missers;
  const std::uint64_t group_cap = std::min<std::uint64_t>(1000, 4 * w);

  const std::uint64_t verify_cost =
      verify_trials ? 2 * std::uint64_t(verify_trials) * (2 + 4 * group_cap) : 0;
  auto out_of_budget = [&](std::uint64_t need) {
    return budget.limit != 0 && oracle.accesses() + need >= budget.limit;
  };

  oracle.access(oracle.target());
  bool warmup = true; // first pass only installs
  std::uint32_t pass_count = 0;
  while (!out_of_budget(verify_cost)) {
    // reshuffle so window membership decorrelates across passes
    for (std::size_t i = batch.size() - 1; i > 0; --i)
      std::swap(batch[i], batch[rng.uniform(i + 1)]);
    window_missers.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (oracle.access(batch[i]))
        window_missers.push_back(batch[i]);
      ++res.stream_accesses;
      const bool boundary = (i + 1) % window == 0 || i + 1 == batch.size();
      if (!boundary)
        continue;
      if (oracle.probe_target()) {
        ++res.evictions_observed;
        if (!warmup)
          for (const Address a : window_missers)
            if (++score[a] >= score_needed && !member_set.count(a) &&
                members.size() < group_cap) {
              member_set.insert(a);
              members.push_back(a);
            }
      }
      window_missers.clear();
      if (out_of_budget(verify_cost))
        break;
    }
    warmup = false;
    ++pass_count;
    if (pass_count >= 4 && members.size() >= w)
      break; // enough scored members for a verdict
  }

  res.scg.members = members;
  if (verify_trials > 0) {
    const auto v =
        differential_verify(oracle, members, verify_trials, 4, rng, params, budget);
    res.eviction_probability = v.group;
    res.control_probability = v.control;
    res.succeeded = v.group >= kVerifyThreshold && v.beats_control();
  } else {
    res.succeeded = members.size() >= w;
  }
  finalize(res, budget);
  return res;
}

// ---------------------------------------------------------------------------
// iTable oversubscription
//
// Grouped replacement evicts a whole entry at once, so "target and candidate
// vanish on the same fill" identifies an entry mate exactly. The churn runs
// in short windows with the pool reinstalled each window: at the eviction
// event a resident pool line definitively does not share the entry, and a
// missing one almost surely left with the target (the window is too short
// for coincidences); two consistent co-evictions confirm a mate.

namespace {

AttackResult discover_entry_mates(AttackerOracle& oracle, RngStream& rng,
                                  const AttackParams& params, std::uint64_t goal,
                                  Budget& budget,
                                  std::vector<Address> candidates) {
  AttackResult res;
  res.scg.target = oracle.target();
  const std::size_t window = 12; // pool size and junk steps per mini-cycle

  std::unordered_map<Address, std::uint32_t> streak;
  std::vector<Address> members;
  std::unordered_set<Address> member_set;
  std::vector<Address> pool;
  std::size_t next_candidate = 0;

  auto refill_pool = [&] {
    while (pool.size() < window) {
      Address a;
      if (next_candidate < candidates.size())
        a = candidates[next_candidate++];
      else
        a = draw_line(rng, params.span_lines, params.geo.offset_bits);
      if (a != oracle.target() && !member_set.count(a))
        pool.push_back(a);
    }
  };

  while (!budget.exhausted() && members.size() < goal) {
    refill_pool();
    // Install target and pool, then churn briefly, watching the target.
    oracle.access(oracle.target());
    for (const Address c : pool)
      oracle.access(c);
    bool event = false;
    for (std::size_t i = 0; i < window && !budget.exhausted(); ++i) {
      oracle.access(draw_line(rng, params.span_lines, params.geo.offset_bits));
      if (oracle.probe_target()) {
        event = true;
        ++res.evictions_observed;
        break;
      }
    }
    if (!event)
      continue;
    // Classify the pool at the eviction instant.
    std::vector<Address> kept;
    for (const Address c : pool) {
      if (oracle.access(c)) {
        if (++streak[c] >= 3) {
          member_set.insert(c);
          members.push_back(c);
        } else {
          kept.push_back(c);
        }
      } else {
        streak.erase(c); // resident at the event: not this entry
      }
    }
    pool = std::move(kept);
  }

  res.scg.members = members;
  finalize(res, budget);
  return res;
}

} // namespace

AttackResult oversubscription_attack(AttackerOracle& oracle, RngStream& rng,
                                     const AttackParams& params,
                                     std::uint64_t budget_in) {
  const std::uint32_t w = params.geo.assoc;
  const std::uint64_t t_entries = params.table_entries ? params.table_entries
                                                       : params.geo.n_lines();
  if (budget_in == 0)
    budget_in = 2000 * params.geo.n_lines();
  Budget budget(oracle, budget_in);

  AttackResult res;
  if (params.first_level_index_bits) {
    // Entry mates differ from the target by a multiple of the table size.
    res.scg.target = oracle.target();
    const LineId t_line = params.geo.line_of(oracle.target());
    for (std::uint64_t k = 1; res.scg.members.size() < w; ++k)
      res.scg.members.push_back(params.geo.addr_of(t_line + k * t_entries));
  } else {
    res = discover_entry_mates(oracle, rng, params, w, budget, {});
  }

  res.eviction_probability = verify_scg(oracle, res.scg.members, 24, 4 * w);
  res.succeeded = res.scg.members.size() >= w && res.eviction_probability >= 0.9;
  finalize(res, budget);
  return res;
}

AttackResult itable_oversubscription_attack(AttackerOracle& oracle, RngStream& rng,
                                            const AttackParams& params,
                                            std::uint64_t budget_in,
                                            std::uint64_t start_size) {
  if (params.first_level_index_bits)
    return oversubscription_attack(oracle, rng, params, budget_in);

  const std::uint32_t w = params.geo.assoc;
  if (budget_in == 0)
    budget_in = 2000 * params.geo.n_lines();
  Budget budget(oracle, budget_in);
  if (start_size == 0)
    start_size = 1000;

  // Bootstrap conflict group; the discovery pool drains it first, then keeps
  // testing fresh lines.
  std::vector<Address> group = draw_distinct(rng, start_size, params, oracle.target());
  for (const Address a : group)
    if (!budget.exhausted())
      oracle.access(a);
  AttackResult res =
      discover_entry_mates(oracle, rng, params, w, budget, std::move(group));
  res.eviction_probability = verify_scg(oracle, res.scg.members, 24, 4 * w);
  res.succeeded = res.scg.members.size() >= w && res.eviction_probability >= 0.9;
  finalize(res, budget);
  return res;
}

} // namespace rcsim
