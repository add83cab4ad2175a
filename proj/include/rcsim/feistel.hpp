#pragma once

#include <cstdint>

#include "rcsim/rng.hpp"

namespace rcsim {

// 128-bit key for the address permutation, tied to the width of the space it
// permutes. Keys with equal material and width are interchangeable.
struct PermutationKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  std::uint32_t domain_bits = 58; // 64 address bits minus 6 offset bits

  static PermutationKey draw(RngStream& rng, std::uint32_t domain_bits);

  friend bool operator==(const PermutationKey&, const PermutationKey&) = default;
};

// Keyed bijection on [0, 2^domain_bits): an alternating Feistel network with
// a splitmix-style round function. Not a cryptographic claim, just a keyed
// permutation with good avalanche.
std::uint64_t encrypt(std::uint64_t value, const PermutationKey& key);
std::uint64_t invert(std::uint64_t enc, const PermutationKey& key);

// Low log2(table_size) bits of an encrypted value. table_size: power of two.
inline std::uint64_t derive_index(std::uint64_t enc, std::uint64_t table_size) {
  return enc & (table_size - 1);
}

} // namespace rcsim
