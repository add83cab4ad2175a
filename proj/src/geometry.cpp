#include "rcsim/geometry.hpp"

#include <stdexcept>

namespace rcsim {

namespace {
bool pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }
} // namespace

void CacheGeometry::validate() const {
  if (!pow2(n_sets))
    throw std::invalid_argument("geometry.n_sets must be a power of two");
  if (!pow2(assoc))
    throw std::invalid_argument("geometry.assoc must be a power of two");
  if (!pow2(n_skews))
    throw std::invalid_argument("geometry.n_skews must be a power of two");
  if (n_skews > assoc || assoc % n_skews != 0)
    throw std::invalid_argument(
        "geometry.n_skews must divide assoc (each skew owns assoc/n_skews ways)");
  if (addr_bits == 0 || addr_bits > 64)
    throw std::invalid_argument("geometry.addr_bits must be in [1, 64]");
  if (offset_bits >= addr_bits)
    throw std::invalid_argument("geometry.offset_bits must be below addr_bits");
  if (set_bits() + offset_bits > addr_bits)
    throw std::invalid_argument("geometry.n_sets does not fit in the address");
  if (domain_bits() < 2)
    throw std::invalid_argument("geometry: permutation domain needs at least 2 bits");
}

Decomposed decompose(Address addr, const CacheGeometry& geo) {
  Decomposed d;
  d.offset = std::uint32_t(addr & ((std::uint64_t(1) << geo.offset_bits) - 1));
  d.set_index = std::uint32_t((addr >> geo.offset_bits) & (geo.n_sets - 1));
  d.tag = addr >> (geo.offset_bits + geo.set_bits());
  return d;
}

Address recompose(const Decomposed& d, const CacheGeometry& geo) {
  return (d.tag << (geo.offset_bits + geo.set_bits())) |
         (std::uint64_t(d.set_index) << geo.offset_bits) | d.offset;
}

} // namespace rcsim
