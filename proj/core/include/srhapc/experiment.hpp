#pragma once

#include "srhapc/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srhapc {

enum class SweepVariable { PtPower, MinPtGain, EhEfficiency, CircuitPowers };
enum class AlgorithmKind { Fixed, Dynamic, Traditional, Oracles };
enum class ExperimentMode { Sweep, Trace, Recycling };

const char* to_string(SweepVariable v);
const char* to_string(AlgorithmKind a);

struct ExperimentSpec {
  std::string name;
  std::string scenario_path;  // empty: caller-provided base config
  SweepVariable variable = SweepVariable::PtPower;
  std::vector<double> values;  // sorted; CircuitPowers: multiplier on (eps_a, eps_b)
  std::vector<AlgorithmKind> algorithms;
  std::uint64_t seed = 0;
  std::string out_path;
  ExperimentMode mode = ExperimentMode::Sweep;

  void validate() const;
};

struct ExperimentResult {
  std::string csv;
  int exit_code = 0;  // 0 ok, 2 some row infeasible, 3 audit failure
  int rows = 0;
};

/// One CSV row per (sweep value x algorithm); rows carry the allocation,
/// iteration counts and the raw-constraint audit verdict. Deterministic for
/// a fixed spec and seed. Trace mode instead emits per-iteration rows.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ScenarioConfig& base);

/// algorithm1 with and without the SU->SU energy-recycling terms, one paired
/// row per sweep value.
ExperimentResult compare_recycling(const ExperimentSpec& spec, const ScenarioConfig& base);

/// Built-in sweep and trace definitions. Throws on unknown name.
ExperimentSpec builtin_experiment(const std::string& name);
std::vector<std::string> builtin_experiment_names();

/// Writes result.csv to spec.out_path (or returns without touching disk when
/// the path is empty) and returns the exit code.
int write_experiment_output(const ExperimentSpec& spec, const ExperimentResult& result);

}  // namespace srhapc
