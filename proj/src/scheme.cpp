#include "rcsim/scheme.hpp"

#include <stdexcept>

namespace rcsim {

const char* to_string(SchemeKind k) {
  switch (k) {
  case SchemeKind::SA: return "sa";
  case SchemeKind::SE: return "se";
  case SchemeKind::DE: return "de";
  case SchemeKind::SRS: return "srs";
  case SchemeKind::DRS: return "drs";
  case SchemeKind::DRS_DE: return "ceaser-s";
  case SchemeKind::TLSR_SE: return "tlsr-se";
  case SchemeKind::TLSR_SRP: return "tlsr-srp";
  case SchemeKind::TLSR_SE_SRP: return "tlsr-se-srp";
  case SchemeKind::TLDR_DE: return "tldr-de";
  case SchemeKind::TLDR_DRP: return "tldr-drp";
  case SchemeKind::TLDR_DE_DRP: return "tldr-de-drp";
  }
  return "?";
}

std::optional<SchemeKind> scheme_kind_from_string(const std::string& name) {
  static const std::pair<const char*, SchemeKind> table[] = {
      {"sa", SchemeKind::SA},
      {"se", SchemeKind::SE},
      {"de", SchemeKind::DE},
      {"ceaser", SchemeKind::DE},
      {"srs", SchemeKind::SRS},
      {"drs", SchemeKind::DRS},
      {"drs-de", SchemeKind::DRS_DE},
      {"ceaser-s", SchemeKind::DRS_DE},
      {"tlsr-se", SchemeKind::TLSR_SE},
      {"tlsr-srp", SchemeKind::TLSR_SRP},
      {"tlsr-se-srp", SchemeKind::TLSR_SE_SRP},
      {"tldr-de", SchemeKind::TLDR_DE},
      {"tldr-drp", SchemeKind::TLDR_DRP},
      {"tldr-de-drp", SchemeKind::TLDR_DE_DRP},
  };
  for (const auto& [s, k] : table)
    if (name == s)
      return k;
  return std::nullopt;
}

std::uint64_t SchemeConfig::effective_itable_entries() const {
  if (itable_entries != 0)
    return itable_entries;
  return is_tldr() ? geo.n_lines() : geo.n_sets;
}

void SchemeConfig::validate() const {
  geo.validate();
  const bool skewed = kind == SchemeKind::SRS || kind == SchemeKind::DRS ||
                      kind == SchemeKind::DRS_DE;
  if (!skewed && kind != SchemeKind::DE && geo.n_skews != 1)
    throw std::invalid_argument("scheme: n_skews must be 1 for non-skewed kinds");
  if (kind == SchemeKind::DE && geo.n_skews != 1)
    throw std::invalid_argument("scheme: plain DE has one skew; use ceaser-s");
  if (de_epoch_multiple <= 0)
    throw std::invalid_argument("scheme.de_epoch_multiple must be positive");
  if (tldr_epoch_multiple <= 0)
    throw std::invalid_argument("scheme.tldr_epoch_multiple must be positive");

  const std::uint64_t t = effective_itable_entries();
  if ((t & (t - 1)) != 0)
    throw std::invalid_argument("scheme.itable_entries must be a power of two");
  const bool tabled = is_tldr() || kind == SchemeKind::TLSR_SE ||
                      kind == SchemeKind::TLSR_SRP || kind == SchemeKind::TLSR_SE_SRP;
  if (tabled && t < geo.n_sets)
    throw std::invalid_argument("scheme.itable_entries must be at least n_sets");
  if (kind == SchemeKind::TLSR_SE && t != geo.n_sets)
    throw std::invalid_argument(
        "scheme.itable_entries must equal n_sets for tlsr-se (identity second level)");
  if (oversub_threshold == 0 || oversub_threshold < -1)
    throw std::invalid_argument("scheme.oversub_threshold must be positive or -1");
}

void Scheme::access(Address addr, Owner owner, AccessOutcome& out) {
  out.reset();
  do_access(geometry().line_of(addr), owner, out);
  ++stats_.accesses;
  if (out.hit)
    ++stats_.hits;
  else
    ++stats_.misses;
  stats_.evicted_lines += out.evicted.size();
}

AccessOutcome Scheme::access(Address addr, Owner owner) {
  AccessOutcome out;
  access(addr, owner, out);
  return out;
}

} // namespace rcsim
