#include "rcsim/classic_schemes.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace rcsim {

namespace {

constexpr std::uint64_t kCipherStream = 0x11;
constexpr std::uint64_t kTableStream = 0x22;
constexpr std::uint64_t kReplaceStream = 0x33;
constexpr std::uint64_t kSkewSelectStream = 0x44;
constexpr std::uint64_t kKeyStream = 0x55;

std::uint64_t domain_mask(std::uint32_t bits) {
  return bits >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << bits) - 1);
}

void evict_slot(SetArray& arr, std::uint32_t row, std::uint32_t way,
                const CacheGeometry& geo, AccessOutcome& out) {
  const LineSlot& s = arr.row(row)[way];
  out.evicted.push_back({geo.addr_of(s.line), s.itable_idx});
  arr.clear_way(row, way);
}

// Fill with empty-way preference, else a uniform random victim.
void fill_row(SetArray& arr, std::uint32_t row, LineId line, Owner owner,
              RngStream& rng, const CacheGeometry& geo, AccessOutcome& out) {
  int way = arr.empty_way(row);
  if (way < 0) {
    way = int(arr.random_victim_way(rng));
    evict_slot(arr, row, std::uint32_t(way), geo, out);
  }
  arr.put(row, std::uint32_t(way), line, owner, -1);
}

void check_no_duplicates(const SetArray& arr) {
  std::vector<LineId> lines;
  lines.reserve(arr.valid_count());
  for (const auto& s : arr.all())
    if (s.valid)
      lines.push_back(s.line);
  std::sort(lines.begin(), lines.end());
  if (std::adjacent_find(lines.begin(), lines.end()) != lines.end())
    throw std::logic_error("duplicate residency detected");
}

} // namespace

// ---------------------------------------------------------------------------
// StaticScheme

StaticScheme::StaticScheme(const SchemeConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), sets_(cfg.geo.n_sets, cfg.geo.assoc),
      rng_(RngStream(seed).substream(kReplaceStream)),
      table_entries_(cfg.effective_itable_entries()) {
  RngStream root(seed);
  auto keys = root.substream(kCipherStream);
  key_ = PermutationKey::draw(keys, cfg_.geo.domain_bits());
  if (second_level_tabled()) {
    // Balanced random second level: every set appears T/S times.
    table_.resize(table_entries_);
    for (std::uint64_t i = 0; i < table_entries_; ++i)
      table_[i] = std::uint32_t(i & (cfg_.geo.n_sets - 1));
    auto trng = root.substream(kTableStream);
    for (std::uint64_t i = table_entries_ - 1; i > 0; --i)
      std::swap(table_[i], table_[trng.uniform(i + 1)]);
  }
}

bool StaticScheme::second_level_tabled() const {
  return cfg_.kind == SchemeKind::TLSR_SRP || cfg_.kind == SchemeKind::TLSR_SE_SRP;
}

std::uint64_t StaticScheme::cipher(LineId line) const {
  if (cfg_.identity_cipher)
    return line & domain_mask(cfg_.geo.domain_bits());
  return encrypt(line, key_);
}

std::uint32_t StaticScheme::mapped_set(LineId line) const {
  switch (cfg_.kind) {
  case SchemeKind::SA:
    return std::uint32_t(line & (cfg_.geo.n_sets - 1));
  case SchemeKind::SE:
    return std::uint32_t(derive_index(cipher(line), cfg_.geo.n_sets));
  case SchemeKind::TLSR_SE:
    // identity second level: the entry index is the set index
    return std::uint32_t(derive_index(cipher(line), table_entries_));
  case SchemeKind::TLSR_SRP:
    return table_[line & (table_entries_ - 1)];
  case SchemeKind::TLSR_SE_SRP:
    return table_[derive_index(cipher(line), table_entries_)];
  default:
    assert(false);
    return 0;
  }
}

void StaticScheme::do_access(LineId line, Owner owner, AccessOutcome& out) {
  const std::uint32_t set = mapped_set(line);
  out.set_probed = set;
  if (sets_.find_way(set, line) >= 0) {
    out.hit = true;
    return;
  }
  fill_row(sets_, set, line, owner, rng_, cfg_.geo, out);
}

std::unique_ptr<Scheme> StaticScheme::clone_cold(std::uint64_t salt) const {
  auto c = std::make_unique<StaticScheme>(cfg_, 0);
  c->key_ = key_;
  c->table_ = table_;
  c->rng_ = RngStream(mix64(rng_.seed() ^ salt));
  return c;
}

void StaticScheme::check_invariants() const { check_no_duplicates(sets_); }

// ---------------------------------------------------------------------------
// SkewScheme

SkewScheme::SkewScheme(const SchemeConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), sets_(cfg.geo.n_sets * cfg.geo.n_skews, cfg.geo.skew_assoc()),
      rng_(RngStream(seed).substream(kReplaceStream)) {
  RngStream root(seed);
  auto keys = root.substream(kCipherStream);
  for (std::uint32_t u = 0; u < cfg_.geo.n_skews; ++u)
    skew_keys_.push_back(PermutationKey::draw(keys, cfg_.geo.domain_bits()));
  select_key_ = root.substream(kSkewSelectStream).next();
}

std::uint32_t SkewScheme::skew_index(LineId line, std::uint32_t skew) const {
  return std::uint32_t(derive_index(encrypt(line, skew_keys_[skew]), cfg_.geo.n_sets));
}

std::uint32_t SkewScheme::static_skew_of(LineId line) const {
  return std::uint32_t(mix64(line ^ select_key_) & (cfg_.geo.n_skews - 1));
}

void SkewScheme::do_access(LineId line, Owner owner, AccessOutcome& out) {
  for (std::uint32_t u = 0; u < cfg_.geo.n_skews; ++u) {
    const std::uint32_t idx = skew_index(line, u);
    if (sets_.find_way(row(u, idx), line) >= 0) {
      out.hit = true;
      out.set_probed = idx;
      out.skew_probed = u;
      return;
    }
  }
  const std::uint32_t u = cfg_.kind == SchemeKind::SRS
                              ? static_skew_of(line)
                              : rng_.uniform32(cfg_.geo.n_skews);
  const std::uint32_t idx = skew_index(line, u);
  out.set_probed = idx;
  out.skew_probed = u;
  fill_row(sets_, row(u, idx), line, owner, rng_, cfg_.geo, out);
}

std::unique_ptr<Scheme> SkewScheme::clone_cold(std::uint64_t salt) const {
  auto c = std::make_unique<SkewScheme>(cfg_, 0);
  c->skew_keys_ = skew_keys_;
  c->select_key_ = select_key_;
  c->rng_ = RngStream(mix64(rng_.seed() ^ salt));
  return c;
}

void SkewScheme::check_invariants() const { check_no_duplicates(sets_); }

// ---------------------------------------------------------------------------
// CeaserScheme

CeaserScheme::CeaserScheme(const SchemeConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), sets_(cfg.geo.n_sets * cfg.geo.n_skews, cfg.geo.skew_assoc()),
      rng_(RngStream(seed).substream(kReplaceStream)),
      key_rng_(RngStream(seed).substream(kKeyStream)) {
  for (std::uint32_t u = 0; u < cfg_.geo.n_skews; ++u) {
    current_.push_back(PermutationKey::draw(key_rng_, cfg_.geo.domain_bits()));
    target_.push_back(PermutationKey::draw(key_rng_, cfg_.geo.domain_bits()));
  }
  epoch_len_ = std::uint64_t(cfg_.de_epoch_multiple * double(cfg_.geo.n_lines()));
  if (epoch_len_ == 0)
    epoch_len_ = 1;
}

std::uint32_t CeaserScheme::current_set(LineId line, std::uint32_t skew) const {
  return std::uint32_t(derive_index(encrypt(line, current_[skew]), cfg_.geo.n_sets));
}

std::uint32_t CeaserScheme::target_set(LineId line, std::uint32_t skew) const {
  return std::uint32_t(derive_index(encrypt(line, target_[skew]), cfg_.geo.n_sets));
}

std::uint32_t CeaserScheme::placement_set(LineId line, std::uint32_t skew) const {
  const std::uint32_t cur = current_set(line, skew);
  return cur < refresh_ptr_ ? target_set(line, skew) : cur;
}

void CeaserScheme::do_access(LineId line, Owner owner, AccessOutcome& out) {
  const std::uint32_t skews = cfg_.geo.n_skews;
  for (std::uint32_t u = 0; u < skews; ++u) {
    const std::uint32_t a = current_set(line, u);
    const std::uint32_t b = target_set(line, u);
    if (sets_.find_way(row(u, a), line) >= 0 ||
        (b != a && sets_.find_way(row(u, b), line) >= 0)) {
      out.hit = true;
      out.set_probed = a;
      out.skew_probed = u;
      advance(out);
      return;
    }
  }
  const std::uint32_t u = skews == 1 ? 0 : rng_.uniform32(skews);
  const std::uint32_t set = placement_set(line, u);
  out.set_probed = set;
  out.skew_probed = u;
  fill_row(sets_, row(u, set), line, owner, rng_, cfg_.geo, out);
  advance(out);
}

void CeaserScheme::advance(AccessOutcome& out) {
  ++access_count_;
  // refresh_ptr tracks floor(access_count * S / E), capped at S.
  const std::uint64_t due = std::min<std::uint64_t>(
      cfg_.geo.n_sets, (access_count_ * cfg_.geo.n_sets) / epoch_len_);
  while (refresh_ptr_ < due)
    refresh_step(out);
  if (access_count_ >= epoch_len_) {
    while (refresh_ptr_ < cfg_.geo.n_sets)
      refresh_step(out);
    rollover();
  }
}

// Move every line in set refresh_ptr (all skews) to its target-key set.
// Re-placement is idempotent for lines already target-mapped here.
void CeaserScheme::refresh_step(AccessOutcome& out) {
  const std::uint32_t p = refresh_ptr_;
  for (std::uint32_t u = 0; u < cfg_.geo.n_skews; ++u) {
    auto slots = sets_.row(row(u, p));
    for (auto& s : slots) {
      if (!s.valid)
        continue;
      const std::uint32_t q = target_set(s.line, u);
      if (q == p)
        continue;
      const LineId line = s.line;
      const Owner owner = s.owner;
      s.valid = false;
      fill_row(sets_, row(u, q), line, owner, rng_, cfg_.geo, out);
      ++stats_.relocations;
    }
  }
  ++refresh_ptr_;
}

void CeaserScheme::rollover() {
  for (std::uint32_t u = 0; u < cfg_.geo.n_skews; ++u) {
    current_[u] = target_[u];
    target_[u] = PermutationKey::draw(key_rng_, cfg_.geo.domain_bits());
  }
  refresh_ptr_ = 0;
  access_count_ = 0;
  ++stats_.epochs;
}

std::unique_ptr<Scheme> CeaserScheme::clone_cold(std::uint64_t salt) const {
  auto c = std::make_unique<CeaserScheme>(cfg_, 0);
  c->current_ = current_;
  c->target_ = target_;
  c->refresh_ptr_ = refresh_ptr_;
  c->access_count_ = access_count_;
  c->rng_ = RngStream(mix64(rng_.seed() ^ salt));
  c->key_rng_ = key_rng_;
  return c;
}

void CeaserScheme::check_invariants() const { check_no_duplicates(sets_); }

// ---------------------------------------------------------------------------

std::unique_ptr<Scheme> make_tldr_scheme(const SchemeConfig& cfg, std::uint64_t seed);

std::unique_ptr<Scheme> make_scheme(const SchemeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  switch (cfg.kind) {
  case SchemeKind::SA:
  case SchemeKind::SE:
  case SchemeKind::TLSR_SE:
  case SchemeKind::TLSR_SRP:
  case SchemeKind::TLSR_SE_SRP:
    return std::make_unique<StaticScheme>(cfg, seed);
  case SchemeKind::SRS:
  case SchemeKind::DRS:
    return std::make_unique<SkewScheme>(cfg, seed);
  case SchemeKind::DE:
  case SchemeKind::DRS_DE:
    return std::make_unique<CeaserScheme>(cfg, seed);
  case SchemeKind::TLDR_DE:
  case SchemeKind::TLDR_DRP:
  case SchemeKind::TLDR_DE_DRP:
    return make_tldr_scheme(cfg, seed);
  }
  throw std::invalid_argument("scheme.kind: unknown kind");
}

} // namespace rcsim
