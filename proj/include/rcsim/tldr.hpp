#pragma once

#include <utility>
#include <vector>

#include "rcsim/feistel.hpp"
#include "rcsim/set_array.hpp"

namespace rcsim {

struct ITableEntry {
  std::uint32_t set_mapping = 0;
  bool refresh = false;       // transitioned to the target key this epoch
  std::uint32_t resident = 0; // lines (cache + buffer) placed through this entry
};

struct BufferedLine {
  LineId line = 0;
  std::uint32_t itable_idx = 0;
};

// Two-level dynamic randomization behind an indirection table.
//   TLDR_DE     : rotating first-level keys, fixed second level, no buffer.
//   TLDR_DRP    : static first level, second level redrawn whenever an
//                 entry's lines are all evicted, victim buffer.
//   TLDR_DE_DRP : both layers; entries transition (and redraw) once per
//                 epoch, the cleaner finishes stragglers in the second half.
class TldrScheme final : public Scheme {
public:
  TldrScheme(const SchemeConfig& cfg, std::uint64_t seed);

  const CacheGeometry& geometry() const override { return cfg_.geo; }
  const SchemeConfig& config() const override { return cfg_; }

  std::unique_ptr<Scheme> clone_cold(std::uint64_t salt) const override;
  void check_invariants() const override;
  std::uint64_t resident_lines() const override;

  // --- instrumentation (tests and shadow oracles only) ---
  bool de_enabled() const { return de_; }
  bool drp_enabled() const { return drp_; }
  std::uint64_t table_size() const { return entries_.size(); }
  const std::vector<ITableEntry>& itable() const { return entries_; }
  // Key-precedence select: the single (entry, set) a lookup probes.
  std::pair<std::uint32_t, std::uint32_t> select(LineId line) const;
  std::uint32_t current_entry(LineId line) const;
  std::uint32_t target_entry(LineId line) const;
  std::uint64_t epoch_progress() const {
    return cfg_.epoch_unit == EpochUnit::evictions ? epoch_evictions_ : epoch_accesses_;
  }
  std::uint64_t epoch_len() const { return epoch_len_; }
  std::uint32_t buffer_size() const { return std::uint32_t(buffer_.size()); }
  std::uint32_t buffer_capacity() const { return buffer_cap_; }

protected:
  void do_access(LineId line, Owner owner, AccessOutcome& out) override;

private:
  void place(LineId line, Owner owner, std::uint32_t entry, std::uint32_t set,
             AccessOutcome& out);
  std::uint32_t grouped_victim(std::uint32_t set);
  void evict_group(std::uint32_t set, std::uint32_t entry, bool forced,
                   AccessOutcome& out);
  void buffer_insert(LineId line, std::uint32_t entry, AccessOutcome& out);
  void transition_entry(std::uint32_t idx, bool forced);
  void cleaner_step(AccessOutcome& out);
  void force_transition(std::uint32_t idx, AccessOutcome& out);
  void post_access(AccessOutcome& out);
  void finish_epoch(AccessOutcome& out);

  SchemeConfig cfg_;
  SetArray sets_;
  RngStream rng_;      // replacement and buffer-overflow draws
  RngStream draw_rng_; // DRP set-mapping draws
  RngStream key_rng_;
  bool de_ = false;
  bool drp_ = false;
  std::uint32_t buffer_cap_ = 0;
  std::uint32_t oversub_threshold_ = 0;
  std::uint64_t epoch_len_ = 0;
  std::uint32_t cleaner_pace_ = 1;

  PermutationKey current_key_;
  PermutationKey target_key_;
  PermutationKey static_key_; // TLDR_DRP with encrypted first level
  std::vector<ITableEntry> entries_;
  std::vector<BufferedLine> buffer_;

  // per-epoch state
  std::uint64_t epoch_accesses_ = 0;
  std::uint64_t epoch_evictions_ = 0;
  std::uint64_t epoch_misses_ = 0;
  std::uint64_t epoch_overflows_ = 0;
  std::uint64_t natural_transitions_ = 0;
  std::uint64_t forced_transitions_ = 0;
  std::uint64_t cleaner_ptr_ = 0;
  std::uint32_t epoch_buffer_peak_ = 0;

  std::vector<std::uint32_t> victim_scratch_;
};

} // namespace rcsim
