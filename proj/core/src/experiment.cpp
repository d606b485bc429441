#include "srhapc/experiment.hpp"

#include "program_builder.hpp"
#include "srhapc/dynamic_sic.hpp"
#include "srhapc/fixed_sic.hpp"
#include "srhapc/oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace srhapc {

const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::PtPower: return "pt_power";
    case SweepVariable::MinPtGain: return "min_pt_gain";
    case SweepVariable::EhEfficiency: return "eh_efficiency";
    case SweepVariable::CircuitPowers: return "circuit_powers";
  }
  return "unknown";
}

const char* to_string(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::Fixed: return "fixed";
    case AlgorithmKind::Dynamic: return "dynamic";
    case AlgorithmKind::Traditional: return "traditional";
    case AlgorithmKind::Oracles: return "oracle";
  }
  return "unknown";
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("experiment: name must be nonempty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) throw std::invalid_argument("experiment: sweep values must be finite");
    if (k > 0 && values[k] < values[k - 1]) {
      throw std::invalid_argument("experiment: sweep values must be sorted ascending");
    }
  }
  if (mode == ExperimentMode::Trace) {
    if (algorithms.size() != 1 ||
        (algorithms[0] != AlgorithmKind::Fixed && algorithms[0] != AlgorithmKind::Dynamic)) {
      throw std::invalid_argument("experiment: trace mode takes exactly one of fixed|dynamic");
    }
  }
}

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int log_level() {
  const char* e = std::getenv("SRHAPC_LOG");
  return e ? std::atoi(e) : 0;
}

void log_line(const std::string& s) {
  if (log_level() > 0) std::fprintf(stderr, "%s\n", s.c_str());
}

ScenarioConfig sweep_config(const ScenarioConfig& base, const ExperimentSpec& spec, double value) {
  ScenarioConfig cfg = base;
  switch (spec.variable) {
    case SweepVariable::PtPower: cfg.pt_power = value; break;
    case SweepVariable::MinPtGain: cfg.min_pt_gain = value; break;
    case SweepVariable::EhEfficiency: cfg.eh_efficiency = value; break;
    case SweepVariable::CircuitPowers:
      cfg.ac_circuit_power = base.ac_circuit_power * value;
      cfg.bc_circuit_power = base.bc_circuit_power * value;
      break;
  }
  if (spec.seed != 0) cfg.fading.seed = spec.seed;
  cfg.validate();
  return cfg;
}

struct RowData {
  double sweep_value = 0.0;
  std::string algorithm;
  AllocationVars vars;
  double su_rate = 0.0;
  double pt_gain = 0.0;
  int iterations = 0;
  bool converged = false;
  bool feasible = false;
  bool audit_pass = false;
  std::string status = "infeasible";
};

std::string sweep_header(int K) {
  std::string h = "sweep_value,algorithm,total_su_rate,pt_rate_gain,T_a,T_b";
  for (int i = 0; i < K; ++i) {
    const std::string s = std::to_string(i);
    h += ",tau_su" + s + ",t_su" + s + ",beta_su" + s + ",p_tr_su" + s;
  }
  h += ",iterations,converged,audit_pass,status";
  return h;
}

std::string sweep_row(const RowData& r, int K) {
  std::string line = fmt_g(r.sweep_value) + "," + r.algorithm + "," + fmt_g(r.su_rate) + "," +
                     fmt_g(r.pt_gain) + "," + fmt_g(r.vars.T_a) + "," + fmt_g(r.vars.T_b);
  for (int i = 0; i < K; ++i) {
    line += "," + fmt_g(r.vars.tau[i]) + "," + fmt_g(r.vars.t[i]) + "," + fmt_g(r.vars.beta[i]) +
            "," + fmt_g(r.vars.p_tr[i]);
  }
  line += "," + std::to_string(r.iterations) + "," + (r.converged ? std::string("1") : "0") +
          "," + (r.audit_pass ? std::string("1") : "0") + "," + r.status;
  return line;
}

void finish_row(RowData& r, const SicOrdering& ordering, const ScenarioConfig& cfg,
                const ChannelGains& gains) {
  if (!r.feasible) {
    r.status = "infeasible";
    return;
  }
  const SlackReport audit = audit_solution(r.vars, ordering, cfg, gains);
  r.audit_pass = audit.pass(1e-6);
  r.status = r.converged ? "converged" : "max_iterations";
}

/// zeroed SU->SU links for the no-recycling arm of the comparison
ChannelGains without_recycling(ChannelGains gains) {
  for (auto& row : gains.f) std::fill(row.begin(), row.end(), 0.0);
  return gains;
}

RowData run_sweep_row(const ScenarioConfig& base, const ExperimentSpec& spec, double value,
                      AlgorithmKind alg, bool zero_recycling = false) {
  const ScenarioConfig cfg = sweep_config(base, spec, value);
  ChannelGains gains = build_channel_gains(cfg);
  if (zero_recycling) gains = without_recycling(gains);
  const int K = cfg.num_sus;

  RowData r;
  r.sweep_value = value;
  r.algorithm = to_string(alg);
  if (zero_recycling) r.algorithm += "_no_recycling";
  r.vars = AllocationVars::zeros(K);

  switch (alg) {
    case AlgorithmKind::Fixed: {
      const FixedSicSolution sol = algorithm1(cfg, gains);
      r.vars = sol.vars;
      r.su_rate = sol.total_su_rate;
      r.pt_gain = sol.pt_rate_gain;
      r.iterations = static_cast<int>(sol.sca_trace.size());
      r.converged = sol.converged;
      r.feasible = sol.feasible;
      finish_row(r, SicOrdering::all_pt_first(K), cfg, gains);
      break;
    }
    case AlgorithmKind::Dynamic: {
      const DynamicSicSolution sol = algorithm2(cfg, gains);
      r.vars = sol.vars;
      r.su_rate = sol.total_su_rate;
      r.pt_gain = sol.pt_rate_gain;
      r.iterations = static_cast<int>(sol.bcd_trace.size());
      r.converged = sol.converged;
      r.feasible = sol.feasible;
      finish_row(r, sol.ordering, cfg, gains);
      break;
    }
    case AlgorithmKind::Traditional: {
      const BaselineSolution sol = traditional_sr_baseline(cfg, gains);
      r.vars = AllocationVars::zeros(K);
      r.vars.T_b = cfg.block_duration;
      r.vars.tau = sol.tau;
      r.vars.beta = sol.beta;
      r.su_rate = sol.rate;
      r.converged = sol.feasible;
      r.feasible = sol.feasible;
      if (sol.feasible) r.pt_gain = pt_rate_gain(r.vars, SicOrdering::all_pt_first(K), gains, cfg);
      r.iterations = 1;
      finish_row(r, SicOrdering::all_pt_first(K), cfg, gains);
      break;
    }
    case AlgorithmKind::Oracles: {
      if (K == 1) {
        const GridResult sol = grid_oracle(cfg, gains, GridSpec{17, 1.0, 1});
        r.feasible = sol.found;
        r.converged = sol.found;
        if (sol.found) {
          r.vars = sol.best;
          r.su_rate = sol.objective;
          r.pt_gain = pt_rate_gain(r.vars, SicOrdering::all_pt_first(K), gains, cfg);
        }
        r.iterations = 1;
        finish_row(r, SicOrdering::all_pt_first(K), cfg, gains);
      } else {
        const ExhaustiveSicResult sol = exhaustive_sic_oracle(cfg, gains);
        r.feasible = sol.feasible;
        r.converged = sol.feasible;
        if (sol.feasible) {
          r.vars = sol.best.vars;
          r.su_rate = sol.rate;
          r.pt_gain = sol.best.pt_rate_gain;
        }
        r.iterations = sol.evaluated;
        finish_row(r, sol.ordering, cfg, gains);
      }
      break;
    }
  }
  log_line("row " + r.algorithm + " @ " + fmt_g(value) + ": " + r.status);
  return r;
}

/// Deterministic pool: jobs indexed up front, results stored by index.
template <typename Job>
std::vector<RowData> run_pool(const std::vector<Job>& jobs) {
  std::vector<RowData> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(jobs.size(),
                                                     std::thread::hardware_concurrency()));
  auto body = [&]() {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        results[j] = jobs[j]();
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

int exit_code_for(const std::vector<RowData>& rows) {
  bool any_infeasible = false;
  for (const RowData& r : rows) {
    if (!r.feasible) {
      any_infeasible = true;
    } else if (!r.audit_pass) {
      return 3;
    }
  }
  return any_infeasible ? 2 : 0;
}

ExperimentResult trace_experiment(const ExperimentSpec& spec, const ScenarioConfig& base) {
  const AlgorithmKind alg = spec.algorithms[0];
  std::string csv = "# schema=1\n";
  bool any_infeasible = false;
  int rows = 0;
  if (alg == AlgorithmKind::Fixed) {
    csv += "sweep_value,algorithm,iteration,objective,anchor_norm,rate_gain_slack\n";
    for (double value : spec.values) {
      const ScenarioConfig cfg = sweep_config(base, spec, value);
      const ChannelGains gains = build_channel_gains(cfg);
      P3Anchor anchor;
      anchor.p_tr_anchor.resize(cfg.num_sus);
      for (int i = 0; i < cfg.num_sus; ++i) {
        anchor.p_tr_anchor[i] = cfg.eh_efficiency * cfg.pt_power * gains.a[i];
      }
      const detail::ScaResult sca = detail::run_sca(
          cfg, gains, SicOrdering::all_pt_first(cfg.num_sus), anchor, nullptr);
      if (!sca.feasible) {
        any_infeasible = true;
        continue;
      }
      for (std::size_t k = 0; k < sca.trace_scaled.size(); ++k) {
        csv += fmt_g(value) + ",fixed," + std::to_string(k) + "," +
               fmt_g(cfg.bandwidth * sca.trace_scaled[k]) + "," + fmt_g(sca.anchor_norm_trace[k]) +
               "," + fmt_g(cfg.bandwidth * sca.gain_slack_trace[k]) + "\n";
        ++rows;
      }
    }
  } else {
    csv += "sweep_value,algorithm,outer_iter,inner_iters,zeta,binary_gap,total_su_rate,pt_rate_gain\n";
    for (double value : spec.values) {
      const ScenarioConfig cfg = sweep_config(base, spec, value);
      const ChannelGains gains = build_channel_gains(cfg);
      const DynamicSicSolution sol = algorithm2(cfg, gains);
      if (!sol.feasible) {
        any_infeasible = true;
        continue;
      }
      for (std::size_t k = 0; k < sol.bcd_trace.size(); ++k) {
        const std::size_t inner =
            (k < sol.inner_traces.size()) ? sol.inner_traces[k].size() : 0;
        csv += fmt_g(value) + ",dynamic," + std::to_string(k) + "," + std::to_string(inner) +
               "," + fmt_g(sol.zeta_trace[k]) + "," + fmt_g(sol.binary_gap_trace[k]) + "," +
               fmt_g(sol.bcd_trace[k]) + "," + fmt_g(sol.pass_pt_gain[k]) + "\n";
        ++rows;
      }
    }
  }
  ExperimentResult out;
  out.csv = std::move(csv);
  out.rows = rows;
  out.exit_code = any_infeasible ? 2 : 0;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const ScenarioConfig& base) {
  spec.validate();
  base.validate();
  if (spec.mode == ExperimentMode::Recycling) return compare_recycling(spec, base);
  if (spec.mode == ExperimentMode::Trace) return trace_experiment(spec, base);

  const int K = base.num_sus;
  using Job = std::function<RowData()>;
  std::vector<Job> jobs;
  for (double value : spec.values) {
    for (AlgorithmKind alg : spec.algorithms) {
      jobs.push_back([&base, &spec, value, alg] { return run_sweep_row(base, spec, value, alg); });
    }
  }
  const std::vector<RowData> rows = run_pool(jobs);

  std::string csv = "# schema=1\n" + sweep_header(K) + "\n";
  for (const RowData& r : rows) csv += sweep_row(r, K) + "\n";
  ExperimentResult out;
  out.csv = std::move(csv);
  out.rows = static_cast<int>(rows.size());
  out.exit_code = exit_code_for(rows);
  return out;
}

ExperimentResult compare_recycling(const ExperimentSpec& spec, const ScenarioConfig& base) {
  spec.validate();
  base.validate();
  const int K = base.num_sus;
  using Job = std::function<RowData()>;
  std::vector<Job> jobs;
  for (double value : spec.values) {
    jobs.push_back([&base, &spec, value] {
      return run_sweep_row(base, spec, value, AlgorithmKind::Fixed, false);
    });
    jobs.push_back([&base, &spec, value] {
      return run_sweep_row(base, spec, value, AlgorithmKind::Fixed, true);
    });
  }
  const std::vector<RowData> rows = run_pool(jobs);

  std::string csv = "# schema=1\n" + sweep_header(K) + "\n";
  for (const RowData& r : rows) csv += sweep_row(r, K) + "\n";
  ExperimentResult out;
  out.csv = std::move(csv);
  out.rows = static_cast<int>(rows.size());
  out.exit_code = exit_code_for(rows);
  return out;
}

ExperimentSpec builtin_experiment(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  if (name == "trace-fixed") {
    s.mode = ExperimentMode::Trace;
    s.variable = SweepVariable::PtPower;
    s.values = {0.5, 1.0, 2.0};
    s.algorithms = {AlgorithmKind::Fixed};
  } else if (name == "power-sweep") {
    s.variable = SweepVariable::PtPower;
    s.values = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    s.algorithms = {AlgorithmKind::Fixed, AlgorithmKind::Traditional};
  } else if (name == "gain-sweep") {
    s.variable = SweepVariable::MinPtGain;
    s.values = {1.0e3, 2.0e3, 5.0e3, 1.0e4};
    s.algorithms = {AlgorithmKind::Fixed};
  } else if (name == "gain-sweep-dynamic") {
    s.variable = SweepVariable::MinPtGain;
    s.values = {1.0e3, 2.0e3, 5.0e3, 1.0e4};
    s.algorithms = {AlgorithmKind::Fixed, AlgorithmKind::Dynamic};
  } else if (name == "eh-sweep") {
    s.variable = SweepVariable::EhEfficiency;
    s.values = {0.4, 0.6, 0.8, 1.0};
    s.algorithms = {AlgorithmKind::Fixed};
  } else if (name == "recycling") {
    s.mode = ExperimentMode::Recycling;
    s.variable = SweepVariable::PtPower;
    s.values = {0.5, 1.0, 1.5, 2.0};
    s.algorithms = {AlgorithmKind::Fixed};
  } else if (name == "trace-dynamic") {
    s.mode = ExperimentMode::Trace;
    s.variable = SweepVariable::PtPower;
    s.values = {0.5, 1.0, 2.0};
    s.algorithms = {AlgorithmKind::Dynamic};
  } else if (name == "ordering-sweep") {
    s.variable = SweepVariable::MinPtGain;
    s.values = {1.0e3, 5.0e3, 1.0e4, 2.0e4, 3.0e4};
    s.algorithms = {AlgorithmKind::Fixed, AlgorithmKind::Dynamic};
  } else {
    throw std::invalid_argument("unknown builtin experiment: " + name);
  }
  return s;
}

std::vector<std::string> builtin_experiment_names() {
  return {"trace-fixed",  "power-sweep", "gain-sweep",    "gain-sweep-dynamic",
          "eh-sweep",     "recycling",   "trace-dynamic", "ordering-sweep"};
}

int write_experiment_output(const ExperimentSpec& spec, const ExperimentResult& result) {
  if (!spec.out_path.empty()) {
    std::ofstream out(spec.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + spec.out_path);
    out << result.csv;
    if (!out) throw std::runtime_error("failed writing output file: " + spec.out_path);
  }
  return result.exit_code;
}

}  // namespace srhapc
