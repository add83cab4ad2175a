#pragma once

#include <bit>
#include <cstdint>
#include <string>

namespace rcsim {

// Full byte address. The low offset_bits select the byte within a line and
// never participate in set mapping.
using Address = std::uint64_t;

// Line id: address with the block offset stripped (addr >> offset_bits).
using LineId = std::uint64_t;

struct CacheGeometry {
  std::uint32_t n_sets = 2048;
  std::uint32_t assoc = 16;
  std::uint32_t n_skews = 1;     // 1 for non-skewed schemes
  std::uint32_t offset_bits = 6; // 64-byte lines
  std::uint32_t addr_bits = 64;

  std::uint64_t n_lines() const { return std::uint64_t(n_sets) * assoc; }
  std::uint32_t set_bits() const { return std::uint32_t(std::bit_width(n_sets) - 1); }
  // Width of the line-id space, i.e. the permutation domain.
  std::uint32_t domain_bits() const { return addr_bits - offset_bits; }

  // Skews partition the ways: each skew spans all n_sets sets with
  // assoc / n_skews ways. n_skews must divide assoc.
  std::uint32_t skew_assoc() const { return assoc / n_skews; }

  LineId line_of(Address a) const { return a >> offset_bits; }
  Address addr_of(LineId line) const { return line << offset_bits; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Decomposed {
  std::uint64_t tag = 0;
  std::uint32_t set_index = 0;
  std::uint32_t offset = 0;
};

Decomposed decompose(Address addr, const CacheGeometry& geo);
Address recompose(const Decomposed& d, const CacheGeometry& geo);

} // namespace rcsim
