#include "rcsim/tldr.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace rcsim {

namespace {
constexpr std::uint64_t kReplaceStream = 0x33;
constexpr std::uint64_t kKeyStream = 0x55;
constexpr std::uint64_t kDrawStream = 0x66;
constexpr std::uint64_t kInitStream = 0x77;
} // namespace

TldrScheme::TldrScheme(const SchemeConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), sets_(cfg.geo.n_sets, cfg.geo.assoc),
      rng_(RngStream(seed).substream(kReplaceStream)),
      draw_rng_(RngStream(seed).substream(kDrawStream)),
      key_rng_(RngStream(seed).substream(kKeyStream)) {
  de_ = cfg_.kind == SchemeKind::TLDR_DE || cfg_.kind == SchemeKind::TLDR_DE_DRP;
  drp_ = cfg_.kind == SchemeKind::TLDR_DRP || cfg_.kind == SchemeKind::TLDR_DE_DRP;
  // The victim buffer exists to absorb oversubscribed entries under DRP.
  buffer_cap_ = drp_ ? cfg_.buffer_capacity : 0;
  oversub_threshold_ = cfg_.oversub_threshold < 0 ? cfg_.geo.assoc
                                                  : std::uint32_t(cfg_.oversub_threshold);

  current_key_ = PermutationKey::draw(key_rng_, cfg_.geo.domain_bits());
  target_key_ = PermutationKey::draw(key_rng_, cfg_.geo.domain_bits());
  static_key_ = PermutationKey::draw(key_rng_, cfg_.geo.domain_bits());

  entries_.resize(cfg_.effective_itable_entries());
  auto init = RngStream(seed).substream(kInitStream);
  for (auto& e : entries_)
    e.set_mapping = init.uniform32(cfg_.geo.n_sets);

  epoch_len_ = std::uint64_t(cfg_.tldr_epoch_multiple * double(cfg_.geo.n_lines()));
  if (epoch_len_ < 2)
    epoch_len_ = 2;
  const std::uint64_t half = epoch_len_ / 2;
  cleaner_pace_ = std::uint32_t((entries_.size() + half - 1) / half);
  if (cleaner_pace_ == 0)
    cleaner_pace_ = 1;
}

std::uint32_t TldrScheme::current_entry(LineId line) const {
  return std::uint32_t(derive_index(encrypt(line, current_key_), entries_.size()));
}

std::uint32_t TldrScheme::target_entry(LineId line) const {
  return std::uint32_t(derive_index(encrypt(line, target_key_), entries_.size()));
}

std::pair<std::uint32_t, std::uint32_t> TldrScheme::select(LineId line) const {
  if (de_) {
    const std::uint32_t i = current_entry(line);
    if (!entries_[i].refresh)
      return {i, entries_[i].set_mapping};
    const std::uint32_t j = target_entry(line);
    return {j, entries_[j].set_mapping};
  }
  const std::uint32_t e =
      cfg_.tldr_first_level == FirstLevel::index_bits
          ? std::uint32_t(line & (entries_.size() - 1))
          : std::uint32_t(derive_index(encrypt(line, static_key_), entries_.size()));
  return {e, entries_[e].set_mapping};
}

void TldrScheme::do_access(LineId line, Owner owner, AccessOutcome& out) {
  if (buffer_cap_ > 0) {
    for (const auto& b : buffer_) {
      if (b.line == line) {
        out.hit = true;
        out.buffer_hit = true;
        post_access(out);
        return;
      }
    }
  }
  const auto [entry, set] = select(line);
  out.set_probed = set;
  if (sets_.find_way(set, line) >= 0) {
    out.hit = true;
    post_access(out);
    return;
  }
  ++epoch_misses_;
  place(line, owner, entry, set, out);
  post_access(out);
}

void TldrScheme::place(LineId line, Owner owner, std::uint32_t entry,
                       std::uint32_t set, AccessOutcome& out) {
  for (int iter = 0;; ++iter) {
    assert(iter < 64 && "placement did not settle");
    if (buffer_cap_ > 0 && entries_[entry].resident >= oversub_threshold_) {
      buffer_insert(line, entry, out);
      return;
    }
    const int way = sets_.empty_way(set);
    if (way >= 0) {
      sets_.put(set, std::uint32_t(way), line, owner, std::int32_t(entry));
      ++entries_[entry].resident;
      out.set_probed = set;
      return;
    }
    const std::uint32_t victim = grouped_victim(set);
    evict_group(set, victim, /*forced=*/false, out);
    if (victim != entry)
      continue; // a way is free now, next iteration fills it
    // We evicted our own entry's group; the entry transitioned, so the
    // placement must be re-derived (Algorithm-1 order would strand the line).
    const auto next = select(line);
    entry = next.first;
    set = next.second;
  }
}

// Classify the full set's lines by iTable entry and pick a victim entry.
// By default the entry behind a uniformly random way is chosen, so a larger
// group is proportionally more likely to go; the alternative draws uniformly
// among the distinct entries present.
std::uint32_t TldrScheme::grouped_victim(std::uint32_t set) {
  if (cfg_.victim_entry_by_way) {
    const auto& slot = sets_.row(set)[rng_.uniform32(cfg_.geo.assoc)];
    assert(slot.valid && slot.itable_idx >= 0);
    return std::uint32_t(slot.itable_idx);
  }
  victim_scratch_.clear();
  for (const auto& s : sets_.row(set)) {
    assert(s.valid && s.itable_idx >= 0);
    const auto e = std::uint32_t(s.itable_idx);
    if (std::find(victim_scratch_.begin(), victim_scratch_.end(), e) ==
        victim_scratch_.end())
      victim_scratch_.push_back(e);
  }
  return victim_scratch_[rng_.uniform(victim_scratch_.size())];
}

void TldrScheme::evict_group(std::uint32_t set, std::uint32_t entry, bool forced,
                             AccessOutcome& out) {
  std::uint32_t evicted = 0;
  auto slots = sets_.row(set);
  for (std::uint32_t w = 0; w < slots.size(); ++w) {
    if (slots[w].valid && slots[w].itable_idx == std::int32_t(entry)) {
      out.evicted.push_back({cfg_.geo.addr_of(slots[w].line), slots[w].itable_idx});
      sets_.clear_way(set, w);
      ++evicted;
    }
  }
  assert(entries_[entry].resident >= evicted);
  entries_[entry].resident -= evicted;
  epoch_evictions_ += evicted;
  if (forced)
    stats_.cleaner_forced += evicted;
  if (entries_[entry].resident == 0)
    transition_entry(entry, forced);
}

void TldrScheme::buffer_insert(LineId line, std::uint32_t entry, AccessOutcome& out) {
  if (std::uint32_t(buffer_.size()) >= buffer_cap_) {
    const std::size_t vi = rng_.uniform(buffer_.size());
    const std::uint32_t ve = buffer_[vi].itable_idx;
    out.evicted.push_back({cfg_.geo.addr_of(buffer_[vi].line), std::int32_t(ve)});
    buffer_.erase(buffer_.begin() + std::ptrdiff_t(vi));
    assert(entries_[ve].resident > 0);
    if (--entries_[ve].resident == 0)
      transition_entry(ve, false);
    ++stats_.buffer_overflows;
    ++epoch_overflows_;
  }
  buffer_.push_back({line, entry});
  ++entries_[entry].resident;
  epoch_buffer_peak_ = std::max(epoch_buffer_peak_, std::uint32_t(buffer_.size()));
  stats_.buffer_peak = std::max(stats_.buffer_peak, std::uint32_t(buffer_.size()));
  out.spilled_to_buffer = true;
}

void TldrScheme::transition_entry(std::uint32_t idx, bool forced) {
  assert(entries_[idx].resident == 0 && "transition with lines outstanding");
  if (de_) {
    if (entries_[idx].refresh)
      return; // already transitioned this epoch
    entries_[idx].refresh = true;
    if (forced)
      ++forced_transitions_;
    else
      ++natural_transitions_;
    if (drp_)
      entries_[idx].set_mapping = draw_rng_.uniform32(cfg_.geo.n_sets);
    return;
  }
  // No epoch structure without the DE layer: every full-group eviction
  // re-randomizes the mapping.
  if (drp_)
    entries_[idx].set_mapping = draw_rng_.uniform32(cfg_.geo.n_sets);
  ++natural_transitions_;
}

void TldrScheme::force_transition(std::uint32_t idx, AccessOutcome& out) {
  if (entries_[idx].resident > 0) {
    evict_group(entries_[idx].set_mapping, idx, /*forced=*/true, out);
    // Buffered lines pin the entry too; the cleaner flushes them.
    for (std::size_t i = buffer_.size(); i-- > 0;) {
      if (buffer_[i].itable_idx == idx) {
        out.evicted.push_back({cfg_.geo.addr_of(buffer_[i].line), std::int32_t(idx)});
        buffer_.erase(buffer_.begin() + std::ptrdiff_t(i));
        assert(entries_[idx].resident > 0);
        --entries_[idx].resident;
        ++stats_.cleaner_forced;
        ++epoch_evictions_;
      }
    }
    if (entries_[idx].resident == 0 && !entries_[idx].refresh)
      transition_entry(idx, true);
  } else {
    transition_entry(idx, true);
  }
}

void TldrScheme::cleaner_step(AccessOutcome& out) {
  if (cleaner_ptr_ >= entries_.size())
    return;
  const auto idx = std::uint32_t(cleaner_ptr_++);
  if (!entries_[idx].refresh)
    force_transition(idx, out);
}

void TldrScheme::post_access(AccessOutcome& out) {
  ++epoch_accesses_;
  if (de_ && epoch_progress() * 2 >= epoch_len_)
    for (std::uint32_t i = 0; i < cleaner_pace_; ++i)
      cleaner_step(out);
  if (epoch_progress() >= epoch_len_)
    finish_epoch(out);
}

void TldrScheme::finish_epoch(AccessOutcome& out) {
  if (de_) {
    while (cleaner_ptr_ < entries_.size())
      cleaner_step(out);
    for (const auto& e : entries_)
      if (!e.refresh)
        throw std::logic_error("untransitioned iTable entry at epoch rollover");
  }
  stats_.epoch_log.push_back({de_ ? double(natural_transitions_) / double(entries_.size())
                                  : 1.0,
                              forced_transitions_, epoch_buffer_peak_, epoch_overflows_,
                              epoch_misses_});
  ++stats_.epochs;
  if (de_) {
    current_key_ = target_key_;
    target_key_ = PermutationKey::draw(key_rng_, cfg_.geo.domain_bits());
    for (auto& e : entries_)
      e.refresh = false;
  }
  cleaner_ptr_ = 0;
  epoch_accesses_ = 0;
  epoch_evictions_ = 0;
  epoch_misses_ = 0;
  epoch_overflows_ = 0;
  natural_transitions_ = 0;
  forced_transitions_ = 0;
  epoch_buffer_peak_ = std::uint32_t(buffer_.size());
}

std::unique_ptr<Scheme> TldrScheme::clone_cold(std::uint64_t salt) const {
  auto c = std::make_unique<TldrScheme>(cfg_, 0);
  c->current_key_ = current_key_;
  c->target_key_ = target_key_;
  c->static_key_ = static_key_;
  c->entries_ = entries_;
  for (auto& e : c->entries_)
    e.resident = 0;
  c->buffer_.clear();
  c->cleaner_ptr_ = cleaner_ptr_;
  c->epoch_accesses_ = epoch_accesses_;
  c->epoch_evictions_ = epoch_evictions_;
  c->rng_ = RngStream(mix64(rng_.seed() ^ salt));
  c->draw_rng_ = RngStream(mix64(draw_rng_.seed() ^ mix64(salt)));
  c->key_rng_ = key_rng_;
  return c;
}

std::uint64_t TldrScheme::resident_lines() const {
  return sets_.valid_count() + buffer_.size();
}

void TldrScheme::check_invariants() const {
  // Duplicate residency across sets and buffer.
  std::vector<LineId> lines;
  for (const auto& s : sets_.all())
    if (s.valid)
      lines.push_back(s.line);
  for (const auto& b : buffer_)
    lines.push_back(b.line);
  std::sort(lines.begin(), lines.end());
  if (std::adjacent_find(lines.begin(), lines.end()) != lines.end())
    throw std::logic_error("duplicate residency detected");

  // Entry-residency accounting and lookup consistency.
  std::vector<std::uint32_t> counts(entries_.size(), 0);
  for (std::uint32_t r = 0; r < sets_.rows(); ++r) {
    for (const auto& s : sets_.row(r)) {
      if (!s.valid)
        continue;
      if (s.itable_idx < 0 || std::size_t(s.itable_idx) >= entries_.size())
        throw std::logic_error("slot without a valid iTable entry");
      ++counts[std::size_t(s.itable_idx)];
      const auto sel = select(s.line);
      if (sel.first != std::uint32_t(s.itable_idx) || sel.second != r)
        throw std::logic_error("lookup inconsistency: stranded line");
      if (entries_[std::size_t(s.itable_idx)].set_mapping != r)
        throw std::logic_error("line outside its entry's mapped set");
    }
  }
  for (const auto& b : buffer_)
    ++counts[b.itable_idx];
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (counts[i] != entries_[i].resident)
      throw std::logic_error("iTable resident count out of sync");
  if (buffer_.size() > buffer_cap_)
    throw std::logic_error("victim buffer above capacity");
}

std::unique_ptr<Scheme> make_tldr_scheme(const SchemeConfig& cfg, std::uint64_t seed) {
  return std::make_unique<TldrScheme>(cfg, seed);
}

} // namespace rcsim
