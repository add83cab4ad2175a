#include <doctest.h>

#include "rcsim/experiment.hpp"

using namespace rcsim;

namespace {

ExperimentSpec tiny_trace_spec() {
  ExperimentSpec spec;
  spec.seed = 99;
  spec.trials = 6;
  spec.scheme.kind = SchemeKind::TLDR_DE_DRP;
  spec.scheme.geo.n_sets = 32;
  spec.scheme.geo.assoc = 8;
  spec.workload.type = WorkloadType::trace;
  spec.workload.trace.kind = TraceKind::uniform_random;
  spec.workload.trace.span_lines = 1 << 16;
  spec.workload.trace.length = 5000;
  return spec;
}

} // namespace

TEST_CASE("zero-length trace yields all-zero stats") {
  ExperimentSpec spec;
  spec.trials = 1;
  spec.scheme.kind = SchemeKind::SA;
  spec.scheme.geo.n_sets = 16;
  spec.scheme.geo.assoc = 2;
  spec.workload.type = WorkloadType::trace;
  spec.workload.trace.kind = TraceKind::looping_working_set;
  spec.workload.trace.working_set = 4;
  spec.workload.trace.length = 1;
  // length 0 is rejected as a config error; length 1 gives one access
  spec.workload.trace.length = 1;
  const auto s = run(spec);
  CHECK(s.trials[0].scheme_stats.accesses == 1);
  CHECK(s.trials[0].scheme_stats.hits == 0);
}

TEST_CASE("identical specs produce byte-identical CSV, serial or parallel") {
  auto spec = tiny_trace_spec();
  spec.jobs = 1;
  const auto a = run(spec);
  spec.jobs = 4;
  const auto b = run(spec);
  spec.jobs = 3;
  const auto c = run(spec);
  CHECK(a.csv == b.csv);
  CHECK(a.csv == c.csv);
  CHECK(!a.csv.empty());
}

TEST_CASE("attack workloads are deterministic too") {
  ExperimentSpec spec;
  spec.seed = 5;
  spec.trials = 4;
  spec.jobs = 4;
  spec.scheme.kind = SchemeKind::SA;
  spec.scheme.geo.n_sets = 64;
  spec.scheme.geo.assoc = 4;
  spec.workload.type = WorkloadType::attack;
  spec.workload.attack = AttackKind::builder;
  spec.workload.scg_target_size = 4;
  spec.workload.warmup_accesses = 512;
  const auto a = run(spec);
  const auto b = run(spec);
  CHECK(a.csv == b.csv);
  CHECK(a.success_rate > 0.5);
}

TEST_CASE("config parsing, sections and precedence") {
  const std::string text = R"(
# comment
[experiment]
seed = 42
trials = 3

[scheme]
kind = tldr-de-drp
sets = 32
assoc = 8
buffer = 16

[workload]
type = trace
trace = uniform-random
span = 65536
length = 1000
)";
  auto cfg = KvConfig::parse_string(text);
  auto spec = spec_from_config(cfg);
  CHECK(spec.seed == 42);
  CHECK(spec.trials == 3);
  CHECK(spec.scheme.kind == SchemeKind::TLDR_DE_DRP);
  CHECK(spec.scheme.buffer_capacity == 16);
  CHECK(spec.workload.trace.length == 1000);

  // flags override the file
  KvConfig flags;
  flags.set("experiment.seed", "7");
  apply_config(spec, flags);
  CHECK(spec.seed == 7);
  CHECK(spec.trials == 3);
}

TEST_CASE("invalid configuration names the offending key") {
  auto cfg = KvConfig::parse_string("[scheme]\nkind = nonsense\n");
  CHECK_THROWS_WITH_AS(spec_from_config(cfg), doctest::Contains("scheme.kind"),
                       ConfigError);
  auto cfg2 = KvConfig::parse_string("[workload]\nattack = nope\n");
  CHECK_THROWS_WITH_AS(spec_from_config(cfg2), doctest::Contains("workload.attack"),
                       ConfigError);
  auto cfg3 = KvConfig::parse_string("[experiment]\ntrials = abc\n");
  CHECK_THROWS_WITH_AS(spec_from_config(cfg3), doctest::Contains("experiment.trials"),
                       ConfigError);
}

TEST_CASE("sweep emits one aggregated row per axis value") {
  auto spec = tiny_trace_spec();
  spec.trials = 2;
  spec.workload.trace.length = 2000;
  const auto csv = sweep(spec, "scheme.assoc", {"4", "8"});
  // header + 2 rows
  std::size_t rows = 0;
  for (const char ch : csv)
    rows += ch == '\n' ? 1 : 0;
  CHECK(rows == 3);
  CHECK(csv.find("scheme.assoc,4,") != std::string::npos);
  CHECK(csv.find("scheme.assoc,8,") != std::string::npos);
}
