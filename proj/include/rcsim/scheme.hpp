#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcsim/geometry.hpp"

namespace rcsim {

enum class Owner : std::uint8_t { attacker, victim, cleaner, other };

enum class SchemeKind {
  SA,          // plain set-associative
  SE,          // static encrypt
  DE,          // dynamic encrypt (CEASER)
  SRS,         // static random skew
  DRS,         // dynamic random skew
  DRS_DE,      // CEASER-S: dynamic encrypt per skew + random skew select
  TLSR_SE,     // static table, encrypted first level, identity second level
  TLSR_SRP,    // static table, index-bit first level, random second level
  TLSR_SE_SRP, // static table, encrypted first level, random second level
  TLDR_DE,     // indirection table, rotating keys, static second level
  TLDR_DRP,    // indirection table, static first level, re-randomized second level
  TLDR_DE_DRP, // the combined scheme
};

const char* to_string(SchemeKind k);
std::optional<SchemeKind> scheme_kind_from_string(const std::string& name);

enum class EpochUnit : std::uint8_t { evictions, accesses };
enum class FirstLevel : std::uint8_t { index_bits, encrypted };

struct EvictedLine {
  Address addr = 0;            // line-aligned original address
  std::int32_t itable_idx = -1; // -1 when the scheme has no table
};

// The attacker-observable surface of one access plus simulation metadata.
struct AccessOutcome {
  bool hit = false;
  bool buffer_hit = false;
  bool spilled_to_buffer = false;
  std::uint32_t set_probed = 0;
  std::optional<std::uint32_t> skew_probed;
  std::vector<EvictedLine> evicted; // lines that left the scheme this access

  void reset() {
    hit = buffer_hit = spilled_to_buffer = false;
    set_probed = 0;
    skew_probed.reset();
    evicted.clear();
  }
};

// Per-epoch record emitted by the TLDR schemes.
struct EpochRecord {
  double natural_fraction = 0.0;
  std::uint64_t cleaner_forced = 0;
  std::uint32_t buffer_peak = 0;
  std::uint64_t buffer_overflows = 0;
  std::uint64_t misses = 0;
};

struct SchemeStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evicted_lines = 0; // lines evicted or dropped, all causes
  std::uint64_t relocations = 0;   // CEASER refresh moves
  std::uint64_t cleaner_forced = 0;
  std::uint64_t buffer_overflows = 0;
  std::uint64_t epochs = 0;
  std::uint32_t buffer_peak = 0;
  std::vector<EpochRecord> epoch_log;
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::SA;
  CacheGeometry geo;

  // DE / CEASER-S: epoch length in accesses, as a multiple of N.
  double de_epoch_multiple = 100.0;

  // TLDR family.
  std::uint64_t itable_entries = 0;   // 0 -> default (N for TLDR, S for TLSR)
  double tldr_epoch_multiple = 2.0;   // E = multiple * N
  EpochUnit epoch_unit = EpochUnit::evictions;
  std::uint32_t buffer_capacity = 32; // 0 disables the victim buffer
  std::int32_t oversub_threshold = -1; // -1 -> assoc
  FirstLevel tldr_first_level = FirstLevel::index_bits; // TLDR_DRP only

  // Grouped replacement picks the victim entry either through a uniformly
  // random way (so a group's odds scale with its size, matching the random
  // set-mapping analysis) or uniformly among the distinct entries present.
  bool victim_entry_by_way = true;

  // Test hook: replace the keyed permutation by the identity.
  bool identity_cipher = false;

  void validate() const; // throws std::invalid_argument naming the field
  bool is_tldr() const {
    return kind == SchemeKind::TLDR_DE || kind == SchemeKind::TLDR_DRP ||
           kind == SchemeKind::TLDR_DE_DRP;
  }
  std::uint64_t effective_itable_entries() const;
};

class Scheme {
public:
  virtual ~Scheme() = default;

  // Zero-allocation entry point: out.evicted capacity is reused.
  void access(Address addr, Owner owner, AccessOutcome& out);
  AccessOutcome access(Address addr, Owner owner = Owner::attacker);

  virtual const CacheGeometry& geometry() const = 0;
  virtual const SchemeConfig& config() const = 0;
  const SchemeStats& stats() const { return stats_; }

  // Same mapping state (keys, tables, pointers) with all residency cleared;
  // used for repeated independent measurements of a built conflict group.
  // salt re-seeds the clone's replacement/skew-select stream.
  virtual std::unique_ptr<Scheme> clone_cold(std::uint64_t salt) const = 0;

  // Full-state scan: duplicate residency, slot counts, table accounting.
  // Throws std::logic_error on violation. Test/diagnostic use.
  virtual void check_invariants() const = 0;

  // Instrumentation for tests and shadow oracles, not visible to attacks.
  virtual std::uint64_t resident_lines() const = 0;

protected:
  virtual void do_access(LineId line, Owner owner, AccessOutcome& out) = 0;
  SchemeStats stats_;
};

std::unique_ptr<Scheme> make_scheme(const SchemeConfig& cfg, std::uint64_t seed);

} // namespace rcsim
