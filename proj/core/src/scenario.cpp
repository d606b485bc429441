#include "srhapc/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace srhapc {

using nlohmann::json;

double distance(const Vec2& p, const Vec2& q) {
  return std::hypot(p.x - q.x, p.y - q.y);
}

double path_gain(double dist, double exponent, double fading) {
  if (!(dist > 0.0)) {
    throw std::invalid_argument("path_gain: distance must be positive (co-located nodes?)");
  }
  if (!(exponent > 0.0) || !(fading > 0.0)) {
    throw std::invalid_argument("path_gain: exponent and fading must be positive");
  }
  return fading * std::pow(dist, -exponent);
}

double noise_power(double psd_dbm_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) {
    throw std::invalid_argument("noise_power: bandwidth must be positive");
  }
  return std::pow(10.0, (psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("scenario: " + msg); };
  if (num_sus < 1) fail("num_sus must be >= 1");
  if (static_cast<int>(su_pos.size()) != num_sus) fail("su_pos size must equal num_sus");
  if (!(pt_power > 0.0)) fail("pt_power must be positive");
  if (!(bandwidth > 0.0)) fail("bandwidth must be positive");
  if (!(eh_efficiency > 0.0) || eh_efficiency > 1.0) fail("eh_efficiency must be in (0,1]");
  if (bc_circuit_power < 0.0 || ac_circuit_power < 0.0) fail("circuit powers must be >= 0");
  if (spreading_factor < 2) fail("spreading_factor must be >= 2");
  if (min_pt_gain < 0.0) fail("min_pt_gain must be >= 0");
  if (!(block_duration > 0.0)) fail("block_duration must be positive");
  if (quadrature_order < 4) fail("quadrature_order must be >= 4");
  auto finite = [](const Vec2& p) { return std::isfinite(p.x) && std::isfinite(p.y); };
  if (!finite(pt_pos) || !finite(rx_pos)) fail("positions must be finite");
  for (const auto& p : su_pos) {
    if (!finite(p)) fail("positions must be finite");
  }
  std::vector<Vec2> all{pt_pos, rx_pos};
  all.insert(all.end(), su_pos.begin(), su_pos.end());
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      if (!(distance(all[i], all[j]) > 0.0)) fail("two nodes are co-located");
    }
  }
  if (!(solver.tol > 0.0) || solver.max_newton < 1 || !(solver.barrier_mult > 1.0)) {
    fail("solver options out of range");
  }
  if (!(sca.tol > 0.0) || sca.max_iters < 1) fail("sca options out of range");
  if (!(bcd.tol > 0.0) || bcd.max_outer < 1 || !(bcd.binary_gap_tol > 0.0) ||
      !(bcd.zeta_mult > 1.0) || bcd.zeta_growth_rounds < 0) {
    fail("bcd options out of range");
  }
  auto check_each = [&](const std::vector<double>& v, const char* what) {
    if (!v.empty() && static_cast<int>(v.size()) != num_sus) {
      fail(std::string(what) + " override must have num_sus entries");
    }
  };
  check_each(pathloss.pt_su_each, "pathloss.pt_su_each");
  check_each(pathloss.su_rx_each, "pathloss.su_rx_each");
  if (!pathloss.su_su_each.empty() &&
      static_cast<int>(pathloss.su_su_each.size()) != num_sus) {
    fail("pathloss.su_su_each must be KxK");
  }
  if (fading.mode == FadingMode::Explicit) {
    check_each(fading.pt_su, "fading.pt_su");
    check_each(fading.su_rx, "fading.su_rx");
  }
}

namespace {

// Deterministic unit-mean exponential draws; explicit inverse CDF on top of
// mt19937_64 so results do not depend on the standard library's
// exponential_distribution implementation.
class FadingDraw {
 public:
  explicit FadingDraw(std::uint64_t seed) : rng_(seed) {}
  double next() {
    const std::uint64_t r = rng_();
    const double u = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0,1)
    return -std::log1p(-u);
  }

 private:
  std::mt19937_64 rng_;
};

double class_or_each(double cls, const std::vector<double>& each, int i) {
  return each.empty() ? cls : each[i];
}

}  // namespace

ChannelGains build_channel_gains(const ScenarioConfig& cfg) {
  cfg.validate();
  const int K = cfg.num_sus;

  // Fading draws happen in a fixed order (b, a_i, d_i, upper-triangle f) so
  // seeded runs are reproducible; reciprocal links share one draw.
  double xi_b = 1.0;
  std::vector<double> xi_a(K, 1.0), xi_d(K, 1.0);
  std::vector<std::vector<double>> xi_f(K, std::vector<double>(K, 1.0));
  if (cfg.fading.mode == FadingMode::Exponential) {
    FadingDraw draw(cfg.fading.seed);
    xi_b = draw.next();
    for (int i = 0; i < K; ++i) xi_a[i] = draw.next();
    for (int i = 0; i < K; ++i) xi_d[i] = draw.next();
    for (int i = 0; i < K; ++i) {
      for (int j = i + 1; j < K; ++j) {
        xi_f[i][j] = xi_f[j][i] = draw.next();
      }
    }
  } else if (cfg.fading.mode == FadingMode::Explicit) {
    xi_b = cfg.fading.pt_rx;
    for (int i = 0; i < K; ++i) {
      if (!cfg.fading.pt_su.empty()) xi_a[i] = cfg.fading.pt_su[i];
      if (!cfg.fading.su_rx.empty()) xi_d[i] = cfg.fading.su_rx[i];
    }
    if (!cfg.fading.su_su.empty()) {
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          if (i != j) xi_f[i][j] = cfg.fading.su_su[i][j];
        }
      }
    }
  }

  ChannelGains g;
  g.b = path_gain(distance(cfg.pt_pos, cfg.rx_pos), cfg.pathloss.pt_rx, xi_b);
  g.a.resize(K);
  g.d.resize(K);
  g.f.assign(K, std::vector<double>(K, 0.0));
  for (int i = 0; i < K; ++i) {
    g.a[i] = path_gain(distance(cfg.pt_pos, cfg.su_pos[i]),
                       class_or_each(cfg.pathloss.pt_su, cfg.pathloss.pt_su_each, i), xi_a[i]);
    g.d[i] = path_gain(distance(cfg.su_pos[i], cfg.rx_pos),
                       class_or_each(cfg.pathloss.su_rx, cfg.pathloss.su_rx_each, i), xi_d[i]);
  }
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      const double expo = cfg.pathloss.su_su_each.empty() ? cfg.pathloss.su_su
                                                          : cfg.pathloss.su_su_each[i][j];
      g.f[i][j] = path_gain(distance(cfg.su_pos[i], cfg.su_pos[j]), expo, xi_f[i][j]);
    }
  }
  return g;
}

ScenarioConfig default_scenario(int num_sus) {
  if (num_sus < 1) throw std::invalid_argument("default_scenario: num_sus must be >= 1");
  ScenarioConfig cfg;
  cfg.num_sus = num_sus;
  cfg.su_pos.clear();
  if (num_sus <= 2) {
    cfg.su_pos.push_back({0.8, 0.0});
    if (num_sus == 2) cfg.su_pos.push_back({-0.8, 0.0});
  } else {
    for (int k = 0; k < num_sus; ++k) {
      const double ang = 2.0 * M_PI * k / num_sus;
      cfg.su_pos.push_back({0.8 * std::cos(ang), 0.8 * std::sin(ang)});
    }
  }
  return cfg;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::invalid_argument("scenario json: unknown key '" + it.key() + "' in " + where);
    }
  }
}

Vec2 parse_vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("scenario json: " + where + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_to_json(const Vec2& p) { return json::array({p.x, p.y}); }

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario json: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("scenario json: top level must be an object");

  static const std::set<std::string> top_keys = {
      "num_sus", "pt_pos", "rx_pos", "su_pos", "pt_power", "bandwidth", "noise_psd",
      "eh_efficiency", "bc_circuit_power", "ac_circuit_power", "spreading_factor",
      "min_pt_gain", "block_duration", "pathloss_exponents", "fading_gains",
      "quadrature_order", "solver", "sca", "bcd"};
  reject_unknown_keys(j, top_keys, "top level");

  ScenarioConfig cfg = default_scenario(j.value("num_sus", 2));
  cfg.su_pos.clear();

  if (j.contains("pt_pos")) cfg.pt_pos = parse_vec2(j["pt_pos"], "pt_pos");
  if (j.contains("rx_pos")) cfg.rx_pos = parse_vec2(j["rx_pos"], "rx_pos");
  if (j.contains("su_pos")) {
    for (size_t i = 0; i < j["su_pos"].size(); ++i) {
      cfg.su_pos.push_back(parse_vec2(j["su_pos"][i], "su_pos[" + std::to_string(i) + "]"));
    }
  } else {
    cfg.su_pos = default_scenario(cfg.num_sus).su_pos;
  }
  cfg.pt_power = j.value("pt_power", cfg.pt_power);
  cfg.bandwidth = j.value("bandwidth", cfg.bandwidth);
  cfg.noise_psd = j.value("noise_psd", cfg.noise_psd);
  cfg.eh_efficiency = j.value("eh_efficiency", cfg.eh_efficiency);
  cfg.bc_circuit_power = j.value("bc_circuit_power", cfg.bc_circuit_power);
  cfg.ac_circuit_power = j.value("ac_circuit_power", cfg.ac_circuit_power);
  cfg.spreading_factor = j.value("spreading_factor", cfg.spreading_factor);
  cfg.min_pt_gain = j.value("min_pt_gain", cfg.min_pt_gain);
  cfg.block_duration = j.value("block_duration", cfg.block_duration);
  cfg.quadrature_order = j.value("quadrature_order", cfg.quadrature_order);

  if (j.contains("pathloss_exponents")) {
    const json& p = j["pathloss_exponents"];
    static const std::set<std::string> keys = {"pt_rx", "pt_su", "su_rx", "su_su",
                                               "pt_su_each", "su_rx_each", "su_su_each"};
    reject_unknown_keys(p, keys, "pathloss_exponents");
    cfg.pathloss.pt_rx = p.value("pt_rx", cfg.pathloss.pt_rx);
    cfg.pathloss.pt_su = p.value("pt_su", cfg.pathloss.pt_su);
    cfg.pathloss.su_rx = p.value("su_rx", cfg.pathloss.su_rx);
    cfg.pathloss.su_su = p.value("su_su", cfg.pathloss.su_su);
    if (p.contains("pt_su_each")) cfg.pathloss.pt_su_each = p["pt_su_each"].get<std::vector<double>>();
    if (p.contains("su_rx_each")) cfg.pathloss.su_rx_each = p["su_rx_each"].get<std::vector<double>>();
    if (p.contains("su_su_each")) {
      cfg.pathloss.su_su_each = p["su_su_each"].get<std::vector<std::vector<double>>>();
    }
  }

  if (j.contains("fading_gains")) {
    const json& f = j["fading_gains"];
    static const std::set<std::string> keys = {"mode", "seed", "pt_rx", "pt_su", "su_rx", "su_su"};
    reject_unknown_keys(f, keys, "fading_gains");
    const std::string mode = f.value("mode", "unit");
    if (mode == "unit") {
      cfg.fading.mode = FadingMode::Unit;
    } else if (mode == "exponential") {
      cfg.fading.mode = FadingMode::Exponential;
      cfg.fading.seed = f.value("seed", std::uint64_t{0});
    } else if (mode == "explicit") {
      cfg.fading.mode = FadingMode::Explicit;
      cfg.fading.pt_rx = f.value("pt_rx", 1.0);
      if (f.contains("pt_su")) cfg.fading.pt_su = f["pt_su"].get<std::vector<double>>();
      if (f.contains("su_rx")) cfg.fading.su_rx = f["su_rx"].get<std::vector<double>>();
      if (f.contains("su_su")) cfg.fading.su_su = f["su_su"].get<std::vector<std::vector<double>>>();
    } else {
      throw std::invalid_argument("scenario json: fading_gains.mode must be unit|exponential|explicit");
    }
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    static const std::set<std::string> keys = {"tol", "max_newton", "barrier_mult"};
    reject_unknown_keys(s, keys, "solver");
    cfg.solver.tol = s.value("tol", cfg.solver.tol);
    cfg.solver.max_newton = s.value("max_newton", cfg.solver.max_newton);
    cfg.solver.barrier_mult = s.value("barrier_mult", cfg.solver.barrier_mult);
  }
  if (j.contains("sca")) {
    const json& s = j["sca"];
    static const std::set<std::string> keys = {"tol", "max_iters"};
    reject_unknown_keys(s, keys, "sca");
    cfg.sca.tol = s.value("tol", cfg.sca.tol);
    cfg.sca.max_iters = s.value("max_iters", cfg.sca.max_iters);
  }
  if (j.contains("bcd")) {
    const json& s = j["bcd"];
    static const std::set<std::string> keys = {"tol", "max_outer", "binary_gap_tol",
                                               "zeta_mult", "zeta_growth_rounds",
                                               "optimize_ordering"};
    reject_unknown_keys(s, keys, "bcd");
    cfg.bcd.tol = s.value("tol", cfg.bcd.tol);
    cfg.bcd.max_outer = s.value("max_outer", cfg.bcd.max_outer);
    cfg.bcd.binary_gap_tol = s.value("binary_gap_tol", cfg.bcd.binary_gap_tol);
    cfg.bcd.zeta_mult = s.value("zeta_mult", cfg.bcd.zeta_mult);
    cfg.bcd.zeta_growth_rounds = s.value("zeta_growth_rounds", cfg.bcd.zeta_growth_rounds);
    cfg.bcd.optimize_ordering = s.value("optimize_ordering", cfg.bcd.optimize_ordering);
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["num_sus"] = cfg.num_sus;
  j["pt_pos"] = vec2_to_json(cfg.pt_pos);
  j["rx_pos"] = vec2_to_json(cfg.rx_pos);
  json sus = json::array();
  for (const auto& p : cfg.su_pos) sus.push_back(vec2_to_json(p));
  j["su_pos"] = sus;
  j["pt_power"] = cfg.pt_power;
  j["bandwidth"] = cfg.bandwidth;
  j["noise_psd"] = cfg.noise_psd;
  j["eh_efficiency"] = cfg.eh_efficiency;
  j["bc_circuit_power"] = cfg.bc_circuit_power;
  j["ac_circuit_power"] = cfg.ac_circuit_power;
  j["spreading_factor"] = cfg.spreading_factor;
  j["min_pt_gain"] = cfg.min_pt_gain;
  j["block_duration"] = cfg.block_duration;
  j["quadrature_order"] = cfg.quadrature_order;
  j["pathloss_exponents"] = {{"pt_rx", cfg.pathloss.pt_rx},
                             {"pt_su", cfg.pathloss.pt_su},
                             {"su_rx", cfg.pathloss.su_rx},
                             {"su_su", cfg.pathloss.su_su}};
  switch (cfg.fading.mode) {
    case FadingMode::Unit:
      j["fading_gains"] = {{"mode", "unit"}};
      break;
    case FadingMode::Exponential:
      j["fading_gains"] = {{"mode", "exponential"}, {"seed", cfg.fading.seed}};
      break;
    case FadingMode::Explicit: {
      json f = {{"mode", "explicit"}, {"pt_rx", cfg.fading.pt_rx}};
      if (!cfg.fading.pt_su.empty()) f["pt_su"] = cfg.fading.pt_su;
      if (!cfg.fading.su_rx.empty()) f["su_rx"] = cfg.fading.su_rx;
      if (!cfg.fading.su_su.empty()) f["su_su"] = cfg.fading.su_su;
      j["fading_gains"] = f;
      break;
    }
  }
  j["solver"] = {{"tol", cfg.solver.tol},
                 {"max_newton", cfg.solver.max_newton},
                 {"barrier_mult", cfg.solver.barrier_mult}};
  j["sca"] = {{"tol", cfg.sca.tol}, {"max_iters", cfg.sca.max_iters}};
  j["bcd"] = {{"tol", cfg.bcd.tol},
              {"max_outer", cfg.bcd.max_outer},
              {"binary_gap_tol", cfg.bcd.binary_gap_tol},
              {"zeta_mult", cfg.bcd.zeta_mult},
              {"zeta_growth_rounds", cfg.bcd.zeta_growth_rounds},
              {"optimize_ordering", cfg.bcd.optimize_ordering}};
  return j.dump(2) + "\n";
}

void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  auto as_double = [&] {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("override " + key + ": '" + value + "' is not a number");
    }
    return v;
  };
  auto as_int = [&] { return static_cast<int>(std::llround(as_double())); };
  auto as_bool = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("override " + key + ": '" + value + "' is not a bool");
  };

  if (key == "pt_power") cfg.pt_power = as_double();
  else if (key == "bandwidth") cfg.bandwidth = as_double();
  else if (key == "noise_psd") cfg.noise_psd = as_double();
  else if (key == "eh_efficiency") cfg.eh_efficiency = as_double();
  else if (key == "bc_circuit_power") cfg.bc_circuit_power = as_double();
  else if (key == "ac_circuit_power") cfg.ac_circuit_power = as_double();
  else if (key == "spreading_factor") cfg.spreading_factor = as_int();
  else if (key == "min_pt_gain") cfg.min_pt_gain = as_double();
  else if (key == "block_duration") cfg.block_duration = as_double();
  else if (key == "quadrature_order") cfg.quadrature_order = as_int();
  else if (key == "num_sus") {
    const int k = as_int();
    const auto def = default_scenario(k);
    cfg.num_sus = k;
    cfg.su_pos = def.su_pos;
  } else if (key == "fading.seed") {
    cfg.fading.seed = static_cast<std::uint64_t>(as_double());
  } else if (key == "fading.mode") {
    if (value == "unit") cfg.fading.mode = FadingMode::Unit;
    else if (value == "exponential") cfg.fading.mode = FadingMode::Exponential;
    else throw std::invalid_argument("override fading.mode: unit|exponential only");
  }
  else if (key == "solver.tol") cfg.solver.tol = as_double();
  else if (key == "solver.max_newton") cfg.solver.max_newton = as_int();
  else if (key == "solver.barrier_mult") cfg.solver.barrier_mult = as_double();
  else if (key == "sca.tol") cfg.sca.tol = as_double();
  else if (key == "sca.max_iters") cfg.sca.max_iters = as_int();
  else if (key == "bcd.tol") cfg.bcd.tol = as_double();
  else if (key == "bcd.max_outer") cfg.bcd.max_outer = as_int();
  else if (key == "bcd.binary_gap_tol") cfg.bcd.binary_gap_tol = as_double();
  else if (key == "bcd.optimize_ordering") cfg.bcd.optimize_ordering = as_bool();
  else throw std::invalid_argument("override: unknown key '" + key + "'");
  cfg.validate();
}

}  // namespace srhapc
