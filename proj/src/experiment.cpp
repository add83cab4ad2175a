#include "rcsim/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace rcsim {

const char* to_string(AttackKind k) {
  switch (k) {
  case AttackKind::simple_reduction: return "simple-reduction";
  case AttackKind::fractional_reduction: return "fractional-reduction";
  case AttackKind::builder: return "builder";
  case AttackKind::fast_builder: return "fast-builder";
  case AttackKind::oversubscription: return "oversubscription";
  case AttackKind::itable_oversubscription: return "itable-oversubscription";
  case AttackKind::verify_random: return "verify-random";
  }
  return "?";
}

std::optional<AttackKind> attack_kind_from_string(const std::string& name) {
  static const std::pair<const char*, AttackKind> table[] = {
      {"simple-reduction", AttackKind::simple_reduction},
      {"fractional-reduction", AttackKind::fractional_reduction},
      {"builder", AttackKind::builder},
      {"fast-builder", AttackKind::fast_builder},
      {"oversubscription", AttackKind::oversubscription},
      {"itable-oversubscription", AttackKind::itable_oversubscription},
      {"verify-random", AttackKind::verify_random},
  };
  for (const auto& [s, k] : table)
    if (name == s)
      return k;
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  if (trials == 0)
    throw std::invalid_argument("experiment.trials must be positive");
  scheme.validate();
  if (workload.type == WorkloadType::trace)
    workload.trace.validate();
  if (workload.type == WorkloadType::attack &&
      workload.attack == AttackKind::fractional_reduction &&
      (workload.fraction <= 0 || workload.fraction >= 1))
    throw std::invalid_argument("workload.fraction must be in (0, 1)");
}

namespace {

std::string fmt_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

TrialResult run_trial(const ExperimentSpec& spec, std::uint32_t trial,
                      const std::vector<Address>* file_trace) {
  TrialResult res;
  res.trial = trial;
  RngStream trial_rng = RngStream(spec.seed).substream(0x5EED0000ULL + trial);
  auto scheme = make_scheme(spec.scheme, trial_rng.substream(1).seed());
  const auto& wl = spec.workload;

  if (wl.type == WorkloadType::trace) {
    AccessOutcome out;
    if (file_trace) {
      for (const Address a : *file_trace)
        scheme->access(a, Owner::victim, out);
    } else {
      auto gen_rng = trial_rng.substream(3);
      const auto trace = gen_trace(wl.trace, gen_rng, spec.scheme.geo.offset_bits);
      for (const Address a : trace)
        scheme->access(a, Owner::victim, out);
    }
    res.scheme_stats = scheme->stats();
    res.miss_rate = res.scheme_stats.accesses == 0
                        ? 0.0
                        : double(res.scheme_stats.misses) /
                              double(res.scheme_stats.accesses);
    return res;
  }

  // Attack workload: warm the cache with victim traffic, then attack.
  auto attack_rng = trial_rng.substream(2);
  auto warm_rng = trial_rng.substream(3);
  AccessOutcome out;
  for (std::uint64_t i = 0; i < wl.warmup_accesses; ++i)
    scheme->access(draw_line(warm_rng, wl.span_lines, spec.scheme.geo.offset_bits),
                   Owner::victim, out);

  auto target_rng = trial_rng.substream(4);
  const Address target =
      draw_line(target_rng, wl.span_lines, spec.scheme.geo.offset_bits);
  AttackerOracle oracle(*scheme, target);

  AttackParams params;
  params.geo = spec.scheme.geo;
  params.table_entries = spec.scheme.effective_itable_entries();
  params.span_lines = wl.span_lines;
  params.first_level_index_bits =
      spec.scheme.kind == SchemeKind::TLDR_DRP &&
      spec.scheme.tldr_first_level == FirstLevel::index_bits;

  const std::uint64_t epochs_before = scheme->stats().epochs;
  AttackResult a;
  switch (wl.attack) {
  case AttackKind::simple_reduction:
    a = simple_reduction(oracle, wl.start_size, attack_rng, params, wl.budget);
    break;
  case AttackKind::fractional_reduction:
    a = fractional_reduction(oracle, wl.start_size, wl.fraction, attack_rng, params,
                             wl.budget);
    break;
  case AttackKind::builder:
    a = builder(oracle, wl.scg_target_size ? wl.scg_target_size : params.geo.assoc,
                attack_rng, params, wl.budget, wl.batch, wl.verify_trials);
    break;
  case AttackKind::fast_builder:
    a = fast_builder(oracle, wl.start_size, attack_rng, params, wl.budget, wl.passes,
                     wl.verify_trials);
    break;
  case AttackKind::oversubscription:
    a = oversubscription_attack(oracle, attack_rng, params, wl.budget);
    break;
  case AttackKind::itable_oversubscription:
    a = itable_oversubscription_attack(oracle, attack_rng, params, wl.budget,
                                       wl.start_size);
    break;
  case AttackKind::verify_random: {
    a.scg.target = target;
    a.eviction_probability = verify_random_groups(
        oracle, wl.group_size, wl.verify_trials, attack_rng, wl.span_lines,
        spec.scheme.geo.offset_bits);
    a.accesses_used = oracle.accesses();
    a.succeeded = true;
    break;
  }
  }
  a.epochs_elapsed = scheme->stats().epochs - epochs_before;
  res.attack = std::move(a);
  res.scheme_stats = scheme->stats();
  res.miss_rate = res.scheme_stats.accesses == 0
                      ? 0.0
                      : double(res.scheme_stats.misses) /
                            double(res.scheme_stats.accesses);
  return res;
}

void append_trace_csv(std::string& csv, const TrialResult& r, const std::string& label) {
  csv += label + "," + std::to_string(r.scheme_stats.accesses) + "," +
         std::to_string(r.scheme_stats.hits) + "," +
         std::to_string(r.scheme_stats.misses) + "," + fmt_g6(r.miss_rate) + "," +
         std::to_string(r.scheme_stats.evicted_lines) + "," +
         std::to_string(r.scheme_stats.relocations) + "," +
         std::to_string(r.scheme_stats.cleaner_forced) + "," +
         std::to_string(r.scheme_stats.buffer_peak) + "," +
         std::to_string(r.scheme_stats.buffer_overflows) + "," +
         std::to_string(r.scheme_stats.epochs) + "\r\n";
}

void append_attack_csv(std::string& csv, const TrialResult& r, const std::string& label) {
  const auto& a = r.attack;
  csv += label + "," + (a.succeeded ? "1" : "0") + "," +
         std::to_string(a.scg.members.size()) + "," +
         std::to_string(a.accesses_used) + "," + std::to_string(a.stream_accesses) +
         "," + std::to_string(a.evictions_observed) + "," +
         std::to_string(a.epochs_elapsed) + "," + fmt_g6(a.eviction_probability) +
         "\r\n";
}

} // namespace

RunStats run(const ExperimentSpec& spec) {
  spec.validate();

  // File traces are loaded once and shared read-only across trials.
  std::vector<Address> file_trace;
  const std::vector<Address>* file_trace_ptr = nullptr;
  if (spec.workload.type == WorkloadType::trace &&
      spec.workload.trace.kind == TraceKind::file) {
    file_trace = load_trace_file(spec.workload.trace.path);
    file_trace_ptr = &file_trace;
  }

  RunStats stats;
  stats.trials.resize(spec.trials);
  const std::uint32_t jobs =
      std::max<std::uint32_t>(1, std::min<std::uint32_t>(
                                     spec.jobs ? spec.jobs
                                               : std::thread::hardware_concurrency(),
                                     spec.trials));
  if (jobs == 1) {
    for (std::uint32_t t = 0; t < spec.trials; ++t)
      stats.trials[t] = run_trial(spec, t, file_trace_ptr);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::thread> workers;
    for (std::uint32_t j = 0; j < jobs; ++j)
      workers.emplace_back([&] {
        for (std::uint32_t t = next.fetch_add(1); t < spec.trials;
             t = next.fetch_add(1))
          stats.trials[t] = run_trial(spec, t, file_trace_ptr);
      });
    for (auto& w : workers)
      w.join();
  }

  // Aggregate; the CI comes from per-trial values, never pooled events.
  double sum = 0, sum2 = 0, succ = 0, ev = 0, acc = 0;
  for (const auto& r : stats.trials) {
    sum += r.miss_rate;
    sum2 += r.miss_rate * r.miss_rate;
    succ += r.attack.succeeded ? 1 : 0;
    ev += std::max(0.0, r.attack.eviction_probability);
    acc += double(r.attack.accesses_used);
  }
  const double n = double(spec.trials);
  stats.mean_miss_rate = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum2 - sum * sum / n) / (n - 1)) : 0.0;
  stats.ci95_miss_rate = n > 1 ? 1.96 * std::sqrt(var / n) : 0.0;
  stats.success_rate = succ / n;
  stats.mean_eviction_probability = ev / n;
  stats.mean_accesses_used = acc / n;

  // CSV: header, one row per trial, then a summary row.
  std::string csv;
  if (spec.workload.type == WorkloadType::trace) {
    csv = "trial,accesses,hits,misses,miss_rate,evicted_lines,relocations,"
          "cleaner_forced,buffer_peak,buffer_overflows,epochs\r\n";
    for (const auto& r : stats.trials)
      append_trace_csv(csv, r, std::to_string(r.trial));
    csv += "mean,,,," + fmt_g6(stats.mean_miss_rate) + ",,,,,,\r\n";
    csv += "ci95,,,," + fmt_g6(stats.ci95_miss_rate) + ",,,,,,\r\n";
  } else {
    csv = "trial,succeeded,scg_size,accesses_used,stream_accesses,"
          "evictions_observed,epochs_elapsed,eviction_probability\r\n";
    for (const auto& r : stats.trials)
      append_attack_csv(csv, r, std::to_string(r.trial));
    csv += "mean," + fmt_g6(stats.success_rate) + ",," +
           fmt_g6(stats.mean_accesses_used) + ",,,," +
           fmt_g6(stats.mean_eviction_probability) + "\r\n";
  }
  stats.csv = csv;

  if (!spec.out_path.empty()) {
    std::ofstream out(spec.out_path, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write output file: " + spec.out_path);
    out << csv;
  }
  return stats;
}

namespace {

void set_axis(ExperimentSpec& spec, const std::string& axis, const std::string& value) {
  KvConfig one;
  one.set(axis, value);
  apply_config(spec, one);
}

} // namespace

std::string sweep(const ExperimentSpec& base, const std::string& axis,
                  const std::vector<std::string>& values) {
  std::string csv = "axis,value,trials,success_rate,mean_eviction_probability,"
                    "mean_accesses_used,mean_miss_rate,ci95_miss_rate\r\n";
  for (const auto& v : values) {
    ExperimentSpec spec = base;
    spec.out_path.clear();
    set_axis(spec, axis, v);
    const RunStats s = run(spec);
    csv += axis + "," + v + "," + std::to_string(base.trials) + "," +
           fmt_g6(s.success_rate) + "," + fmt_g6(s.mean_eviction_probability) + "," +
           fmt_g6(s.mean_accesses_used) + "," + fmt_g6(s.mean_miss_rate) + "," +
           fmt_g6(s.ci95_miss_rate) + "\r\n";
  }
  if (!base.out_path.empty()) {
    std::ofstream out(base.out_path, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write output file: " + base.out_path);
    out << csv;
  }
  return csv;
}

ExperimentSpec spec_from_config(const KvConfig& cfg) {
  ExperimentSpec spec;
  apply_config(spec, cfg);
  return spec;
}

void apply_config(ExperimentSpec& spec, const KvConfig& cfg) {
  spec.seed = cfg.get_u64("experiment.seed", spec.seed);
  spec.trials = std::uint32_t(cfg.get_u64("experiment.trials", spec.trials));
  spec.jobs = std::uint32_t(cfg.get_u64("experiment.jobs", spec.jobs));
  spec.out_path = cfg.get_string("experiment.out", spec.out_path);

  if (const auto kind = cfg.get("scheme.kind")) {
    const auto k = scheme_kind_from_string(*kind);
    if (!k)
      throw ConfigError("scheme.kind: unknown scheme '" + *kind + "'");
    spec.scheme.kind = *k;
  }
  auto& g = spec.scheme.geo;
  g.n_sets = std::uint32_t(cfg.get_u64("scheme.sets", g.n_sets));
  g.assoc = std::uint32_t(cfg.get_u64("scheme.assoc", g.assoc));
  g.n_skews = std::uint32_t(cfg.get_u64("scheme.skews", g.n_skews));
  g.offset_bits = std::uint32_t(cfg.get_u64("scheme.offset_bits", g.offset_bits));
  g.addr_bits = std::uint32_t(cfg.get_u64("scheme.addr_bits", g.addr_bits));
  spec.scheme.de_epoch_multiple =
      cfg.get_double("scheme.de_epoch_multiple", spec.scheme.de_epoch_multiple);
  spec.scheme.tldr_epoch_multiple =
      cfg.get_double("scheme.epoch_multiple", spec.scheme.tldr_epoch_multiple);
  spec.scheme.itable_entries = cfg.get_u64("scheme.itable", spec.scheme.itable_entries);
  spec.scheme.buffer_capacity =
      std::uint32_t(cfg.get_u64("scheme.buffer", spec.scheme.buffer_capacity));
  spec.scheme.oversub_threshold = std::int32_t(
      cfg.get_u64("scheme.oversub_threshold",
                  std::uint64_t(spec.scheme.oversub_threshold < 0
                                    ? std::uint64_t(-1)
                                    : std::uint64_t(spec.scheme.oversub_threshold))));
  if (const auto unit = cfg.get("scheme.epoch_unit")) {
    if (*unit == "evictions")
      spec.scheme.epoch_unit = EpochUnit::evictions;
    else if (*unit == "accesses")
      spec.scheme.epoch_unit = EpochUnit::accesses;
    else
      throw ConfigError("scheme.epoch_unit: expected evictions|accesses");
  }
  if (const auto fl = cfg.get("scheme.first_level")) {
    if (*fl == "index-bits")
      spec.scheme.tldr_first_level = FirstLevel::index_bits;
    else if (*fl == "encrypted")
      spec.scheme.tldr_first_level = FirstLevel::encrypted;
    else
      throw ConfigError("scheme.first_level: expected index-bits|encrypted");
  }
  spec.scheme.victim_entry_by_way =
      cfg.get_bool("scheme.victim_by_way", spec.scheme.victim_entry_by_way);
  spec.scheme.identity_cipher =
      cfg.get_bool("scheme.identity_cipher", spec.scheme.identity_cipher);

  if (const auto t = cfg.get("workload.type")) {
    if (*t == "trace")
      spec.workload.type = WorkloadType::trace;
    else if (*t == "attack")
      spec.workload.type = WorkloadType::attack;
    else
      throw ConfigError("workload.type: expected trace|attack");
  }
  auto& wl = spec.workload;
  if (const auto t = cfg.get("workload.trace")) {
    if (*t == "uniform-random")
      wl.trace.kind = TraceKind::uniform_random;
    else if (*t == "looping-working-set")
      wl.trace.kind = TraceKind::looping_working_set;
    else if (*t == "pointer-chase")
      wl.trace.kind = TraceKind::pointer_chase;
    else if (*t == "file")
      wl.trace.kind = TraceKind::file;
    else
      throw ConfigError("workload.trace: unknown trace kind '" + *t + "'");
  }
  wl.trace.span_lines = cfg.get_u64("workload.span", wl.trace.span_lines);
  wl.trace.working_set = cfg.get_u64("workload.working_set", wl.trace.working_set);
  wl.trace.stride = cfg.get_u64("workload.stride", wl.trace.stride);
  wl.trace.length = cfg.get_u64("workload.length", wl.trace.length);
  wl.trace.path = cfg.get_string("workload.path", wl.trace.path);

  if (const auto a = cfg.get("workload.attack")) {
    const auto k = attack_kind_from_string(*a);
    if (!k)
      throw ConfigError("workload.attack: unknown attack '" + *a + "'");
    wl.attack = *k;
  }
  wl.start_size = cfg.get_u64("workload.start_size", wl.start_size);
  wl.fraction = cfg.get_double("workload.fraction", wl.fraction);
  wl.scg_target_size = cfg.get_u64("workload.scg_size", wl.scg_target_size);
  wl.group_size = cfg.get_u64("workload.group_size", wl.group_size);
  wl.budget = cfg.get_u64("workload.budget", wl.budget);
  wl.warmup_accesses = cfg.get_u64("workload.warmup", wl.warmup_accesses);
  wl.batch = std::uint32_t(cfg.get_u64("workload.batch", wl.batch));
  wl.passes = std::uint32_t(cfg.get_u64("workload.passes", wl.passes));
  wl.verify_trials = std::uint32_t(cfg.get_u64("workload.verify_trials", wl.verify_trials));
  wl.span_lines = cfg.get_u64("workload.span", wl.span_lines);
}

} // namespace rcsim
