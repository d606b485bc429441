// Command-line front end: experiment sweeps, convergence traces, constraint
// audits, and reference-oracle runs over a scenario JSON file.
//
// Exit codes: 0 success, 1 usage/config error, 2 any infeasible row,
// 3 audit failure (takes precedence over 2 for completed rows).

#include <CLI11.hpp>

#include <srhapc/dynamic_sic.hpp>
#include <srhapc/experiment.hpp>
#include <srhapc/fixed_sic.hpp>
#include <srhapc/oracles.hpp>
#include <srhapc/scenario.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace srhapc;

struct CommonArgs {
  std::string scenario_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--scenario", args->scenario_path,
                  "Scenario JSON file (default: built-in two-SU layout)");
  cmd->add_option("--out", args->out_path, "Write CSV here instead of stdout");
  cmd->add_option("--seed", args->seed, "Override the fading seed (0 keeps the scenario's)");
  cmd->add_option("--set", args->overrides,
                  "Override a scenario key, e.g. --set pt_power=2 --set solver.tol=1e-8");
}

ScenarioConfig load_base(const CommonArgs& args) {
  ScenarioConfig cfg =
      args.scenario_path.empty() ? default_scenario(2) : load_scenario(args.scenario_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed != 0) cfg.fading.seed = args.seed;
  cfg.validate();
  return cfg;
}

int emit_csv(const ExperimentSpec& spec, const ExperimentResult& result) {
  if (spec.out_path.empty()) {
    std::fputs(result.csv.c_str(), stdout);
    return result.exit_code;
  }
  return write_experiment_output(spec, result);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<AlgorithmKind> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<AlgorithmKind> out;
  for (const std::string& n : names) {
    if (n == "fixed") out.push_back(AlgorithmKind::Fixed);
    else if (n == "dynamic") out.push_back(AlgorithmKind::Dynamic);
    else if (n == "traditional") out.push_back(AlgorithmKind::Traditional);
    else if (n == "oracle") out.push_back(AlgorithmKind::Oracles);
    else throw std::invalid_argument("unknown algorithm '" + n + "'");
  }
  return out;
}

SweepVariable parse_variable(const std::string& name) {
  if (name == "pt_power") return SweepVariable::PtPower;
  if (name == "min_pt_gain") return SweepVariable::MinPtGain;
  if (name == "eh_efficiency") return SweepVariable::EhEfficiency;
  if (name == "circuit_powers") return SweepVariable::CircuitPowers;
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

std::string builtin_help() {
  std::string s = "Built-in experiment (one of:";
  for (const std::string& n : builtin_experiment_names()) s += " " + n;
  return s + ")";
}

int cmd_run(const CommonArgs& common, const std::string& experiment,
            const std::string& variable, const std::vector<double>& values,
            const std::vector<std::string>& algorithms, bool recycling) {
  const ScenarioConfig base = load_base(common);
  ExperimentSpec spec;
  if (!experiment.empty()) {
    spec = builtin_experiment(experiment);
  } else {
    spec.name = "custom";
    spec.variable = parse_variable(variable);
    spec.values = values;
    spec.algorithms = parse_algorithms(algorithms);
    if (recycling) spec.mode = ExperimentMode::Recycling;
  }
  spec.scenario_path = common.scenario_path;
  spec.out_path = common.out_path;
  spec.seed = common.seed;
  const ExperimentResult result = run_experiment(spec, base);
  return emit_csv(spec, result);
}

int cmd_trace(const CommonArgs& common, const std::string& algorithm,
              const std::vector<double>& values) {
  const ScenarioConfig base = load_base(common);
  ExperimentSpec spec = builtin_experiment(algorithm == "dynamic" ? "trace-dynamic"
                                                                  : "trace-fixed");
  if (!values.empty()) spec.values = values;
  spec.scenario_path = common.scenario_path;
  spec.out_path = common.out_path;
  spec.seed = common.seed;
  const ExperimentResult result = run_experiment(spec, base);
  return emit_csv(spec, result);
}

int cmd_audit(const CommonArgs& common, const std::string& algorithm,
              const std::string& solver_dump) {
  const ScenarioConfig cfg = load_base(common);
  const ChannelGains gains = build_channel_gains(cfg);

  AllocationVars vars;
  SicOrdering ordering;
  double su_rate = 0.0;
  bool feasible = false;
  bool converged = false;
  if (algorithm == "dynamic") {
    const DynamicSicSolution sol = algorithm2(cfg, gains);
    vars = sol.vars;
    ordering = sol.ordering;
    su_rate = sol.total_su_rate;
    feasible = sol.feasible;
    converged = sol.converged;
  } else {
    const FixedSicSolution sol = algorithm1(cfg, gains);
    vars = sol.vars;
    ordering = SicOrdering::all_pt_first(cfg.num_sus);
    su_rate = sol.total_su_rate;
    feasible = sol.feasible;
    converged = sol.converged;
  }

  if (!solver_dump.empty()) {
    // Re-solve the assembled program once with the iterate dump enabled; the
    // dump is the documented per-iteration CSV of the interior-point engine.
    P3Anchor anchor;
    anchor.p_tr_anchor.assign(cfg.num_sus, 0.0);
    for (int i = 0; i < cfg.num_sus; ++i) {
      anchor.p_tr_anchor[i] = feasible && vars.t[i] > 1e-9 ? vars.p_tr[i]
                                                           : cfg.eh_efficiency * cfg.pt_power *
                                                                 gains.a[i];
    }
    cvx::SmoothConcaveProgram program = assemble_p3(cfg, gains, anchor);
    cvx::SolveOptions opts;
    opts.tol = cfg.solver.tol;
    opts.max_newton = cfg.solver.max_newton;
    opts.barrier_mult = cfg.solver.barrier_mult;
    opts.iterate_dump_path = solver_dump;
    (void)cvx::solve(program, opts);
  }

  std::ostringstream csv;
  csv << "# schema=1\n";
  csv << "constraint,slack,scale,relative_slack\n";
  int code = 0;
  if (!feasible) {
    code = 2;
  } else {
    const SlackReport report = audit_solution(vars, ordering, cfg, gains);
    for (const auto& e : report.entries) {
      csv << e.name << "," << fmt_g(e.slack) << "," << fmt_g(e.scale) << ","
          << fmt_g(e.slack / e.scale) << "\n";
    }
    if (!report.pass(1e-6)) code = 3;
  }
  csv << "# algorithm=" << (algorithm == "dynamic" ? "dynamic" : "fixed")
      << " total_su_rate=" << fmt_g(su_rate) << " feasible=" << (feasible ? 1 : 0)
      << " converged=" << (converged ? 1 : 0) << "\n";

  ExperimentSpec sink;
  sink.name = "audit";
  sink.out_path = common.out_path;
  ExperimentResult result;
  result.csv = csv.str();
  result.exit_code = code;
  return emit_csv(sink, result);
}

int cmd_oracle(const CommonArgs& common, const std::string& kind, int points, int zoom,
               double p_cap) {
  const ScenarioConfig cfg = load_base(common);
  const ChannelGains gains = build_channel_gains(cfg);
  const int K = cfg.num_sus;

  std::ostringstream csv;
  csv << "# schema=1\n";
  csv << "kind,objective,feasible,detail\n";
  int code = 0;
  const std::string resolved = kind.empty() ? (K == 1 ? "grid" : "exhaustive") : kind;
  if (resolved == "grid") {
    const GridResult r = grid_oracle(cfg, gains, GridSpec{points, p_cap, zoom});
    csv << "grid," << fmt_g(r.objective) << "," << (r.found ? 1 : 0) << ",points="
        << points << ";zoom=" << zoom << "\n";
    if (!r.found) code = 2;
  } else if (resolved == "exhaustive") {
    const ExhaustiveSicResult r = exhaustive_sic_oracle(cfg, gains);
    std::string order;
    for (int i = 0; i < K; ++i) {
      order += r.ordering.alpha_b[i] > 0.5 ? "b" : (r.ordering.alpha_a[i] > 0.5 ? "a" : "-");
    }
    csv << "exhaustive," << fmt_g(r.rate) << "," << (r.feasible ? 1 : 0)
        << ",orderings=" << r.evaluated << ";best=" << order << "\n";
    if (!r.feasible) code = 2;
  } else if (resolved == "traditional") {
    const BaselineSolution r = traditional_sr_baseline(cfg, gains);
    csv << "traditional," << fmt_g(r.rate) << "," << (r.feasible ? 1 : 0) << ",\n";
    if (!r.feasible) code = 2;
  } else {
    throw std::invalid_argument("unknown oracle kind '" + resolved + "'");
  }

  ExperimentSpec sink;
  sink.name = "oracle";
  sink.out_path = common.out_path;
  ExperimentResult result;
  result.csv = csv.str();
  result.exit_code = code;
  return emit_csv(sink, result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-allocation engine for hybrid active-passive backscatter networks"};
  app.require_subcommand(1);

  CommonArgs run_args, trace_args, audit_args, oracle_args;

  CLI::App* run = app.add_subcommand("run", "Run an experiment sweep and emit CSV");
  add_common(run, &run_args);
  std::string run_experiment_name;
  std::string run_variable = "min_pt_gain";
  std::vector<double> run_values;
  std::vector<std::string> run_algorithms{"fixed"};
  bool run_recycling = false;
  run->add_option("--experiment", run_experiment_name, builtin_help());
  run->add_option("--variable", run_variable,
                  "Custom sweep variable: pt_power|min_pt_gain|eh_efficiency|circuit_powers");
  run->add_option("--values", run_values, "Custom sweep values (ascending)")->delimiter(',');
  run->add_option("--algorithms", run_algorithms,
                  "Custom algorithm list: fixed|dynamic|traditional|oracle")
      ->delimiter(',');
  run->add_flag("--recycling", run_recycling,
                "Custom sweep compares energy recycling on/off instead");

  CLI::App* trace = app.add_subcommand("trace", "Emit per-iteration convergence traces");
  add_common(trace, &trace_args);
  std::string trace_algorithm = "fixed";
  std::vector<double> trace_values;
  trace->add_option("--algorithm", trace_algorithm, "fixed|dynamic");
  trace->add_option("--values", trace_values, "Transmit-power sweep values (default 0.5 1 2)")
      ->delimiter(',');

  CLI::App* audit = app.add_subcommand(
      "audit", "Solve once, recheck every constraint from raw definitions");
  add_common(audit, &audit_args);
  std::string audit_algorithm = "fixed";
  std::string audit_solver_dump;
  audit->add_option("--algorithm", audit_algorithm, "fixed|dynamic");
  audit->add_option("--solver-dump", audit_solver_dump,
                    "Also write the interior-point iterate CSV to this path");

  CLI::App* oracle = app.add_subcommand("oracle", "Run a brute-force reference oracle");
  add_common(oracle, &oracle_args);
  std::string oracle_kind;
  int oracle_points = 17;
  int oracle_zoom = 1;
  double oracle_pcap = 1.0;
  oracle->add_option("--kind", oracle_kind, "grid|exhaustive|traditional (default by K)");
  oracle->add_option("--points", oracle_points, "Grid points per dimension");
  oracle->add_option("--zoom", oracle_zoom, "Grid refinement rounds around the incumbent");
  oracle->add_option("--pcap", oracle_pcap, "Grid upper bound for transmit power (W)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_args, run_experiment_name, run_variable, run_values, run_algorithms,
                     run_recycling);
    }
    if (trace->parsed()) return cmd_trace(trace_args, trace_algorithm, trace_values);
    if (audit->parsed()) return cmd_audit(audit_args, audit_algorithm, audit_solver_dump);
    if (oracle->parsed()) {
      return cmd_oracle(oracle_args, oracle_kind, oracle_points, oracle_zoom, oracle_pcap);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
