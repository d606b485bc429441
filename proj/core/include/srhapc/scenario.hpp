#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srhapc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& p, const Vec2& q);

/// Path-loss exponents keyed by link class, with optional per-index
/// overrides (empty vector = use the class default for every link).
struct PathlossExponents {
  double pt_rx = 3.5;
  double pt_su = 2.5;
  double su_rx = 2.9;
  double su_su = 2.5;
  std::vector<double> pt_su_each;               // size K if present
  std::vector<double> su_rx_each;               // size K if present
  std::vector<std::vector<double>> su_su_each;  // KxK symmetric if present
};

enum class FadingMode { Unit, Exponential, Explicit };

/// Small-scale fading power gains. Unit: all 1. Exponential: unit-mean
/// exponential draws from `seed` (reciprocal links share one draw).
/// Explicit: values given per link.
struct FadingSpec {
  FadingMode mode = FadingMode::Unit;
  std::uint64_t seed = 0;
  double pt_rx = 1.0;
  std::vector<double> pt_su;
  std::vector<double> su_rx;
  std::vector<std::vector<double>> su_su;
};

struct SolverOptions {
  double tol = 1e-7;        // barrier gap target m / t_barrier
  int max_newton = 200;     // Newton-step budget per barrier phase
  double barrier_mult = 10.0;
};

struct ScaOptions {
  double tol = 1e-6;  // relative objective change
  int max_iters = 50;
};

struct BcdOptions {
  double tol = 1e-6;          // relative outer objective change
  int max_outer = 20;
  double binary_gap_tol = 1e-3;
  double zeta_mult = 10.0;
  int zeta_growth_rounds = 5;
  bool optimize_ordering = true;  // off: algorithm2 reduces to algorithm1
};

struct ScenarioConfig {
  int num_sus = 1;
  Vec2 pt_pos{0.0, 0.0};
  Vec2 rx_pos{0.0, 100.0};
  std::vector<Vec2> su_pos;
  double pt_power = 1.0;          // P_p, watts
  double bandwidth = 1.0e4;       // W, hertz
  double noise_psd = -90.0;       // dBm/Hz
  double eh_efficiency = 0.8;     // eta
  double bc_circuit_power = 1.0e-5;  // eps_b, watts
  double ac_circuit_power = 1.0e-3;  // eps_a, watts
  int spreading_factor = 128;     // N
  double min_pt_gain = 1.0e3;     // Delta, bit/s
  double block_duration = 1.0;    // T, seconds
  PathlossExponents pathloss;
  FadingSpec fading;
  int quadrature_order = 192;     // Gauss-Hermite nodes per real dimension
  SolverOptions solver;
  ScaOptions sca;
  BcdOptions bcd;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

struct ChannelGains {
  double b = 0.0;                       // PT -> receiver
  std::vector<double> a;                // PT -> SU_i
  std::vector<double> d;                // SU_i -> receiver
  std::vector<std::vector<double>> f;   // SU_j -> SU_i, diagonal 0
};

/// fading * distance^(-exponent). Throws on distance <= 0.
double path_gain(double dist, double exponent, double fading);

/// dBm/Hz PSD integrated over `bandwidth_hz`, returned in watts.
double noise_power(double psd_dbm_hz, double bandwidth_hz);

ChannelGains build_channel_gains(const ScenarioConfig& cfg);

/// Two-SU reference layout: PT at origin, receiver 100 m away, SUs on a
/// 0.8 m circle around the PT. K=1 keeps only the first SU.
ScenarioConfig default_scenario(int num_sus = 2);

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& cfg);

/// Applies a `key=value` override with dotted keys matching the JSON
/// schema (e.g. "pt_power=2.0", "solver.tol=1e-8"). Throws on unknown key.
void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value);

}  // namespace srhapc
