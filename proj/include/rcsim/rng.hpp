#pragma once

#include <cstdint>

namespace rcsim {

// Stateless 64-bit finalizer (splitmix64 style).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded xoshiro256** stream. Substreams are derived by hashing the parent
// seed with a stream id, so any (seed, path-of-ids) replays exactly; draws
// are platform-independent (no libstdc++ distributions involved).
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_)
      w = mix64(s += 0x6a09e667f3bcc909ULL);
    state_[0] |= 1; // never all-zero
  }

  RngStream substream(std::uint64_t stream_id) const {
    return RngStream(mix64(seed_ ^ mix64(stream_id ^ 0x517cc1b727220a95ULL)));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased draw from [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t uniform(std::uint64_t n) {
    using u128 = unsigned __int128;
    u128 m = u128(next()) * n;
    auto lo = std::uint64_t(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = u128(next()) * n;
        lo = std::uint64_t(m);
      }
    }
    return std::uint64_t(m >> 64);
  }

  std::uint32_t uniform32(std::uint32_t n) { return std::uint32_t(uniform(n)); }

  double uniform_real() { return double(next() >> 11) * 0x1.0p-53; }

  std::uint64_t seed() const { return seed_; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
};

} // namespace rcsim
