#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rcsim/analysis.hpp"
#include "rcsim/experiment.hpp"

using namespace rcsim;

namespace {

// Flags land in their own KvConfig so precedence is flag > file > default.
struct CommonArgs {
  std::string config_path;
  KvConfig flags;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key-value config file");
  auto opt = [&args, cmd](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.flags.set(key, v); }, help);
  };
  opt("--seed", "experiment.seed", "master seed");
  opt("--trials", "experiment.trials", "trial count");
  opt("--jobs", "experiment.jobs", "worker threads");
  opt("--out", "experiment.out", "output CSV path");
  opt("--scheme", "scheme.kind", "scheme kind (sa|se|de|srs|drs|ceaser-s|tlsr-*|tldr-*)");
  opt("--sets", "scheme.sets", "number of cache sets");
  opt("--assoc", "scheme.assoc", "cache associativity");
  opt("--skews", "scheme.skews", "skew count");
  opt("--itable", "scheme.itable", "indirection table entries");
  opt("--epoch-multiple", "scheme.epoch_multiple", "TLDR epoch length, multiples of N");
  opt("--de-epoch-multiple", "scheme.de_epoch_multiple",
      "CEASER epoch length, multiples of N");
  opt("--epoch-unit", "scheme.epoch_unit", "evictions|accesses");
  opt("--buffer", "scheme.buffer", "victim buffer capacity (0 disables)");
  opt("--oversub-threshold", "scheme.oversub_threshold", "entry oversubscription bound");
  opt("--first-level", "scheme.first_level", "tldr-drp first level: index-bits|encrypted");
}

ExperimentSpec build_spec(const CommonArgs& args) {
  ExperimentSpec spec;
  if (!args.config_path.empty())
    apply_config(spec, KvConfig::parse_file(args.config_path));
  apply_config(spec, args.flags);
  return spec;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized-cache set-mapping defenses and conflict attacks"};
  app.require_subcommand(1);

  CommonArgs sim_args, attack_args, sweep_args;
  std::string sweep_axis;
  std::vector<std::string> sweep_values;

  auto* simulate = app.add_subcommand("simulate", "run a trace against a scheme");
  add_common(simulate, sim_args);
  auto sim_opt = [&](const char* flag, const char* key, const char* help) {
    simulate->add_option_function<std::string>(
        flag, [&, key](const std::string& v) { sim_args.flags.set(key, v); }, help);
  };
  sim_opt("--trace", "workload.trace", "uniform-random|looping-working-set|pointer-chase|file");
  sim_opt("--length", "workload.length", "trace length (accesses)");
  sim_opt("--span", "workload.span", "address span in lines");
  sim_opt("--working-set", "workload.working_set", "working set in lines");
  sim_opt("--stride", "workload.stride", "stride in lines");
  sim_opt("--path", "workload.path", "trace file path");

  auto* attack = app.add_subcommand("attack", "run an attack against a scheme");
  add_common(attack, attack_args);
  auto atk_opt = [&](const char* flag, const char* key, const char* help) {
    attack->add_option_function<std::string>(
        flag, [&, key](const std::string& v) { attack_args.flags.set(key, v); }, help);
  };
  atk_opt("--attack", "workload.attack",
          "simple-reduction|fractional-reduction|builder|fast-builder|"
          "oversubscription|itable-oversubscription|verify-random");
  atk_opt("--start-size", "workload.start_size", "initial conflict group size L");
  atk_opt("--fraction", "workload.fraction", "kept fraction f");
  atk_opt("--scg-size", "workload.scg_size", "builder target group size");
  atk_opt("--group-size", "workload.group_size", "verify-random group size g");
  atk_opt("--budget", "workload.budget", "oracle access budget");
  atk_opt("--warmup", "workload.warmup", "victim warm-up accesses");
  atk_opt("--batch", "workload.batch", "builder batch size");
  atk_opt("--passes", "workload.passes", "fast-builder passes per batch");
  atk_opt("--verify-trials", "workload.verify_trials", "verification trials");

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat a run over parameter values");
  add_common(sweep_cmd, sweep_args);
  auto swp_opt = [&](const char* flag, const char* key, const char* help) {
    sweep_cmd->add_option_function<std::string>(
        flag, [&, key](const std::string& v) { sweep_args.flags.set(key, v); }, help);
  };
  swp_opt("--type", "workload.type", "trace|attack");
  swp_opt("--attack", "workload.attack", "attack kind");
  swp_opt("--trace", "workload.trace", "trace kind");
  swp_opt("--length", "workload.length", "trace length");
  swp_opt("--group-size", "workload.group_size", "verify-random group size");
  swp_opt("--start-size", "workload.start_size", "initial group size L");
  swp_opt("--scg-size", "workload.scg_size", "builder target size");
  swp_opt("--verify-trials", "workload.verify_trials", "verification trials");
  swp_opt("--warmup", "workload.warmup", "victim warm-up accesses");
  sweep_cmd->add_option("--axis", sweep_axis, "config key to sweep")->required();
  sweep_cmd->add_option("--values", sweep_values, "values for the axis")->required();

  auto* analyze = app.add_subcommand("analyze", "print the closed-form table");
  AnalysisParams ap;
  analyze->add_option("--lines", ap.n_lines, "N");
  analyze->add_option("--sets", ap.n_sets, "S");
  analyze->add_option("--assoc", ap.assoc, "w");
  analyze->add_option("--skews", ap.n_skews, "s");
  analyze->add_option("--group-size", ap.group_size, "g");
  analyze->add_option("--start-size", ap.start_size, "L");
  analyze->add_option("--fraction", ap.fraction, "f");
  analyze->add_option("--load", ap.load, "lambda");
  analyze->add_option("--oversub-k", ap.oversub_k, "k");
  analyze->add_option("--itable", ap.table_entries, "T");

  auto* trace_gen = app.add_subcommand("trace-gen", "emit a trace file");
  CommonArgs gen_args;
  std::string gen_out;
  trace_gen->add_option("--out", gen_out, "output trace path")->required();
  auto gen_opt = [&](const char* flag, const char* key, const char* help) {
    trace_gen->add_option_function<std::string>(
        flag, [&, key](const std::string& v) { gen_args.flags.set(key, v); }, help);
  };
  gen_opt("--seed", "experiment.seed", "seed");
  gen_opt("--trace", "workload.trace", "trace kind");
  gen_opt("--length", "workload.length", "trace length");
  gen_opt("--span", "workload.span", "address span in lines");
  gen_opt("--working-set", "workload.working_set", "working set in lines");
  gen_opt("--stride", "workload.stride", "stride in lines");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      ExperimentSpec spec = build_spec(sim_args);
      spec.workload.type = WorkloadType::trace;
      const RunStats s = run(spec);
      std::cout << s.csv;
      return 0;
    }
    if (attack->parsed()) {
      ExperimentSpec spec = build_spec(attack_args);
      spec.workload.type = WorkloadType::attack;
      const RunStats s = run(spec);
      std::cout << s.csv;
      return 0;
    }
    if (sweep_cmd->parsed()) {
      ExperimentSpec spec = build_spec(sweep_args);
      std::cout << sweep(spec, sweep_axis, sweep_values);
      return 0;
    }
    if (analyze->parsed()) {
      for (const auto& [name, value] : analysis_table(ap))
        std::printf("%-44s %s\n", name.c_str(), value.c_str());
      return 0;
    }
    if (trace_gen->parsed()) {
      ExperimentSpec spec = build_spec(gen_args);
      RngStream rng = RngStream(spec.seed).substream(3);
      const auto trace =
          gen_trace(spec.workload.trace, rng, spec.scheme.geo.offset_bits);
      write_trace_file(gen_out, trace);
      std::cout << "wrote " << trace.size() << " accesses to " << gen_out << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
