#pragma once

#include <vector>

#include "rcsim/feistel.hpp"
#include "rcsim/set_array.hpp"

namespace rcsim {

// SA, SE and the TLSR table variants: one fixed mapping from line to set.
class StaticScheme final : public Scheme {
public:
  StaticScheme(const SchemeConfig& cfg, std::uint64_t seed);

  const CacheGeometry& geometry() const override { return cfg_.geo; }
  const SchemeConfig& config() const override { return cfg_; }
  std::unique_ptr<Scheme> clone_cold(std::uint64_t salt) const override;
  void check_invariants() const override;
  std::uint64_t resident_lines() const override { return sets_.valid_count(); }

  std::uint32_t mapped_set(LineId line) const;

protected:
  void do_access(LineId line, Owner owner, AccessOutcome& out) override;

private:
  bool second_level_tabled() const;
  std::uint64_t cipher(LineId line) const;

  SchemeConfig cfg_;
  SetArray sets_;
  RngStream rng_;
  std::uint64_t table_entries_;
  PermutationKey key_;
  std::vector<std::uint32_t> table_;
};

// SRS / DRS: skews partition the ways; each skew has its own static index
// hash over all sets. SRS picks the fill skew by a static hash of the line,
// DRS by an RNG draw per fill.
class SkewScheme final : public Scheme {
public:
  SkewScheme(const SchemeConfig& cfg, std::uint64_t seed);

  const CacheGeometry& geometry() const override { return cfg_.geo; }
  const SchemeConfig& config() const override { return cfg_; }
  std::unique_ptr<Scheme> clone_cold(std::uint64_t salt) const override;
  void check_invariants() const override;
  std::uint64_t resident_lines() const override { return sets_.valid_count(); }

  std::uint32_t skew_index(LineId line, std::uint32_t skew) const;
  std::uint32_t static_skew_of(LineId line) const;

protected:
  void do_access(LineId line, Owner owner, AccessOutcome& out) override;

private:
  std::uint32_t row(std::uint32_t skew, std::uint32_t idx) const {
    return skew * cfg_.geo.n_sets + idx;
  }

  SchemeConfig cfg_;
  SetArray sets_;
  RngStream rng_;
  std::vector<PermutationKey> skew_keys_;
  std::uint64_t select_key_ = 0;
};

// DE (CEASER) and DRS+DE (CEASER-S). One current/target key pair per skew;
// a refresh pointer sweeps the sets once per epoch moving lines to their
// target-key set, all skews in lockstep. Lookups probe both candidate sets
// of every skew during the transition.
class CeaserScheme final : public Scheme {
public:
  CeaserScheme(const SchemeConfig& cfg, std::uint64_t seed);

  const CacheGeometry& geometry() const override { return cfg_.geo; }
  const SchemeConfig& config() const override { return cfg_; }
  std::unique_ptr<Scheme> clone_cold(std::uint64_t salt) const override;
  void check_invariants() const override;
  std::uint64_t resident_lines() const override { return sets_.valid_count(); }

  std::uint32_t current_set(LineId line, std::uint32_t skew) const;
  std::uint32_t target_set(LineId line, std::uint32_t skew) const;
  std::uint32_t placement_set(LineId line, std::uint32_t skew) const;
  std::uint32_t refresh_ptr() const { return refresh_ptr_; }
  const PermutationKey& current_key(std::uint32_t skew) const { return current_[skew]; }
  const PermutationKey& target_key(std::uint32_t skew) const { return target_[skew]; }

protected:
  void do_access(LineId line, Owner owner, AccessOutcome& out) override;

private:
  std::uint32_t row(std::uint32_t skew, std::uint32_t idx) const {
    return skew * cfg_.geo.n_sets + idx;
  }
  void advance(AccessOutcome& out);
  void refresh_step(AccessOutcome& out);
  void rollover();

  SchemeConfig cfg_;
  SetArray sets_;
  RngStream rng_;
  RngStream key_rng_;
  std::vector<PermutationKey> current_;
  std::vector<PermutationKey> target_;
  std::uint64_t epoch_len_ = 0;
  std::uint64_t access_count_ = 0;
  std::uint32_t refresh_ptr_ = 0;
};

} // namespace rcsim
