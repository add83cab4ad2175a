#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

#include "rcsim/rng.hpp"
#include "rcsim/scheme.hpp"

namespace rcsim {

struct LineSlot {
  LineId line = 0;
  bool valid = false;
  Owner owner = Owner::other;
  std::int32_t itable_idx = -1; // entry the line was placed through, TLDR only
};

// Flat (rows x ways) slot storage. A "row" is one set; skewed schemes use
// row = skew * n_sets + set.
class SetArray {
public:
  SetArray(std::uint32_t rows, std::uint32_t ways)
      : rows_(rows), ways_(ways), slots_(std::size_t(rows) * ways) {}

  std::uint32_t rows() const { return rows_; }
  std::uint32_t ways() const { return ways_; }

  std::span<LineSlot> row(std::uint32_t r) {
    return {slots_.data() + std::size_t(r) * ways_, ways_};
  }
  std::span<const LineSlot> row(std::uint32_t r) const {
    return {slots_.data() + std::size_t(r) * ways_, ways_};
  }

  // Valid-slot tag match on the full line id.
  int find_way(std::uint32_t r, LineId line) const {
    auto s = row(r);
    for (std::uint32_t w = 0; w < ways_; ++w)
      if (s[w].valid && s[w].line == line)
        return int(w);
    return -1;
  }

  int empty_way(std::uint32_t r) const {
    auto s = row(r);
    for (std::uint32_t w = 0; w < ways_; ++w)
      if (!s[w].valid)
        return int(w);
    return -1;
  }

  bool full(std::uint32_t r) const { return empty_way(r) < 0; }

  // Uniform victim among all ways; callers must ensure the row is full.
  std::uint32_t random_victim_way(RngStream& rng) const {
    return rng.uniform32(ways_);
  }

  void put(std::uint32_t r, std::uint32_t way, LineId line, Owner owner,
           std::int32_t itable_idx) {
    LineSlot& s = row(r)[way];
    s.line = line;
    s.valid = true;
    s.owner = owner;
    s.itable_idx = itable_idx;
  }

  void clear_way(std::uint32_t r, std::uint32_t way) { row(r)[way].valid = false; }

  std::uint64_t valid_count() const {
    std::uint64_t n = 0;
    for (const auto& s : slots_)
      n += s.valid;
    return n;
  }

  std::span<const LineSlot> all() const { return slots_; }

private:
  std::uint32_t rows_;
  std::uint32_t ways_;
  std::vector<LineSlot> slots_;
};

} // namespace rcsim
