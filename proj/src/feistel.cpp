#include "rcsim/feistel.hpp"

#include <cassert>

namespace rcsim {

namespace {

constexpr int kRounds = 6;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t round_key(const PermutationKey& k, int r) {
  return mix64(k.lo + 0x9e3779b97f4a7c15ULL * std::uint64_t(r + 1)) ^
         rotl(k.hi, (7 * r + 1) & 63);
}

std::uint64_t mask(std::uint32_t bits) {
  return bits >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << bits) - 1);
}

} // namespace

PermutationKey PermutationKey::draw(RngStream& rng, std::uint32_t domain_bits) {
  PermutationKey k;
  k.hi = rng.next();
  k.lo = rng.next();
  k.domain_bits = domain_bits;
  return k;
}

// Alternating Feistel over halves of width a (high) and b (low); works for
// odd domain widths too since only same-side XORs occur.
std::uint64_t encrypt(std::uint64_t value, const PermutationKey& key) {
  assert(key.domain_bits >= 2 && key.domain_bits <= 64);
  const std::uint32_t b = key.domain_bits / 2;
  const std::uint32_t a = key.domain_bits - b;
  std::uint64_t left = value >> b;
  std::uint64_t right = value & mask(b);
  for (int r = 0; r < kRounds; ++r) {
    if ((r & 1) == 0)
      left ^= mix64(right ^ round_key(key, r)) & mask(a);
    else
      right ^= mix64(left ^ round_key(key, r)) & mask(b);
  }
  return (left << b) | right;
}

std::uint64_t invert(std::uint64_t enc, const PermutationKey& key) {
  assert(key.domain_bits >= 2 && key.domain_bits <= 64);
  const std::uint32_t b = key.domain_bits / 2;
  const std::uint32_t a = key.domain_bits - b;
  std::uint64_t left = enc >> b;
  std::uint64_t right = enc & mask(b);
  for (int r = kRounds - 1; r >= 0; --r) {
    if ((r & 1) == 0)
      left ^= mix64(right ^ round_key(key, r)) & mask(a);
    else
      right ^= mix64(left ^ round_key(key, r)) & mask(b);
  }
  return (left << b) | right;
}

} // namespace rcsim
