#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ness/errors.hpp"
#include "ness/experiment.hpp"

namespace ness {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config key '" + key + "' in " + where);
    }
  }
}

}  // namespace

WireGeometry ExperimentConfig::geometry(int max_length) const {
  const int needed = std::max((wire_length - 1) / 2, max_length / 2 + 1);
  return WireGeometry(wire_length, std::max(window_halfwidth, needed));
}

QuadratureSpec ExperimentConfig::resolved_quadrature() const {
  QuadratureSpec spec = quadrature;
  if (spec.panels_per_unit_k <= 0) {
    spec.panels_per_unit_k = QuadratureSpec::for_geometry(WireGeometry(wire_length))
                                 .panels_per_unit_k;
  }
  return spec;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (wire_length < 1 || wire_length % 2 == 0) fail("wire_length must be odd and positive");
  if (window_halfwidth < 0) fail("window_halfwidth must be >= 0");
  if (strengths.empty()) fail("strengths must not be empty");
  for (double w : strengths) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("disorder strengths must be >= 0");
  }
  if (bias.empty()) fail("bias list must not be empty");
  for (double dm : bias) {
    if (!(dm >= 0.0)) fail("bias values must be >= 0");
    const double mp = mu_bar + dm / 2, mm = mu_bar - dm / 2;
    if (!(mp < 2.0 && mm > -2.0)) fail("mu_bar +- dmu/2 must lie inside (-2, 2)");
  }
  if (seeds.empty()) fail("seeds must not be empty");
  if (lengths.empty()) fail("lengths must not be empty");
  for (int L : lengths) {
    if (L < 3) fail("subsystem lengths must be >= 3");
  }
  for (int L : reservoir_lengths) {
    if (L < 3) fail("reservoir lengths must be >= 3");
  }
  if (!(regime_ratio > 1.0)) fail("regime_ratio must exceed 1");
  try {
    resolved_quadrature().validate(WireGeometry(wire_length));
  } catch (const ParameterError& e) {
    fail(std::string("quadrature: ") + e.what());
  }
  for (const auto& [a, b] : eta_pairs) {
    if (a == b) fail("eta pairs need distinct bias values");
  }
  if (!(transmission.k_lo > 0 && transmission.k_lo < transmission.k_hi &&
        transmission.k_hi < 3.141592653589793)) {
    fail("transmission range must satisfy 0 < k_lo < k_hi < pi");
  }
  if (!(transmission.step_fraction > 0 && transmission.step_fraction <= 1.0 / 16)) {
    fail("transmission step_fraction must be in (0, 1/16]");
  }
  if (!(calibration.target_lo >= 0 && calibration.target_lo < calibration.target_hi &&
        calibration.target_hi <= 1.0)) {
    fail("calibration window must satisfy 0 <= lo < hi <= 1");
  }
  if (rmap.points < 2 || rmap.length < 1) fail("rmap needs points >= 2 and length >= 1");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"wire_length", "window_halfwidth", "strengths", "mu_bar", "bias",
                  "lengths", "seeds", "samples", "quadrature", "regime_ratio",
                  "eta_pairs", "eta_min_length", "reservoir_lengths", "identity_lengths",
                  "ridge_lengths", "include_bound_states", "wavefunction_k",
                  "transmission", "calibration", "rmap", "output_dir", "cache_dir"},
                 "config");
  ExperimentConfig c;
  read(j, "wire_length", c.wire_length);
  read(j, "window_halfwidth", c.window_halfwidth);
  read(j, "strengths", c.strengths);
  read(j, "mu_bar", c.mu_bar);
  read(j, "bias", c.bias);
  read(j, "lengths", c.lengths);
  read(j, "seeds", c.seeds);
  if (j.contains("samples")) {
    int samples = 0;
    read(j, "samples", samples);
    if (samples < 1) throw ConfigError("samples must be >= 1");
    c.seeds.clear();
    for (int s = 1; s <= samples; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    reject_unknown(q, {"panels_per_unit_k", "nodes_per_panel", "tolerance",
                       "max_refinements"},
                   "quadrature");
    read(q, "panels_per_unit_k", c.quadrature.panels_per_unit_k);
    read(q, "nodes_per_panel", c.quadrature.nodes_per_panel);
    read(q, "tolerance", c.quadrature.tolerance);
    read(q, "max_refinements", c.quadrature.max_refinements);
  }
  read(j, "regime_ratio", c.regime_ratio);
  if (j.contains("eta_pairs")) {
    c.eta_pairs.clear();
    for (const json& p : j.at("eta_pairs")) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("eta_pairs entries are [dmu, dmu']");
      c.eta_pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }
  read(j, "eta_min_length", c.eta_min_length);
  read(j, "reservoir_lengths", c.reservoir_lengths);
  read(j, "identity_lengths", c.identity_lengths);
  read(j, "ridge_lengths", c.ridge_lengths);
  read(j, "include_bound_states", c.include_bound_states);
  read(j, "wavefunction_k", c.wavefunction_k);
  if (j.contains("transmission")) {
    const json& t = j.at("transmission");
    reject_unknown(t, {"k_lo", "k_hi", "step_fraction"}, "transmission");
    read(t, "k_lo", c.transmission.k_lo);
    read(t, "k_hi", c.transmission.k_hi);
    read(t, "step_fraction", c.transmission.step_fraction);
  }
  if (j.contains("calibration")) {
    const json& t = j.at("calibration");
    reject_unknown(t, {"target_lo", "target_hi", "delta_mu", "w_start", "w_max",
                       "iterations"},
                   "calibration");
    read(t, "target_lo", c.calibration.target_lo);
    read(t, "target_hi", c.calibration.target_hi);
    read(t, "delta_mu", c.calibration.delta_mu);
    read(t, "w_start", c.calibration.w_start);
    read(t, "w_max", c.calibration.w_max);
    read(t, "iterations", c.calibration.iterations);
  }
  if (j.contains("rmap")) {
    const json& t = j.at("rmap");
    reject_unknown(t, {"length", "points"}, "rmap");
    read(t, "length", c.rmap.length);
    read(t, "points", c.rmap.points);
  }
  read(j, "output_dir", c.output_dir);
  read(j, "cache_dir", c.cache_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["wire_length"] = c.wire_length;
  j["window_halfwidth"] = c.window_halfwidth;
  j["strengths"] = c.strengths;
  j["mu_bar"] = c.mu_bar;
  j["bias"] = c.bias;
  j["lengths"] = c.lengths;
  j["seeds"] = c.seeds;
  j["quadrature"] = {{"panels_per_unit_k", c.quadrature.panels_per_unit_k},
                     {"nodes_per_panel", c.quadrature.nodes_per_panel},
                     {"tolerance", c.quadrature.tolerance},
                     {"max_refinements", c.quadrature.max_refinements}};
  j["regime_ratio"] = c.regime_ratio;
  json pairs = json::array();
  for (const auto& [a, b] : c.eta_pairs) pairs.push_back({a, b});
  j["eta_pairs"] = pairs;
  j["eta_min_length"] = c.eta_min_length;
  j["reservoir_lengths"] = c.reservoir_lengths;
  j["identity_lengths"] = c.identity_lengths;
  j["ridge_lengths"] = c.ridge_lengths;
  j["include_bound_states"] = c.include_bound_states;
  j["wavefunction_k"] = c.wavefunction_k;
  j["transmission"] = {{"k_lo", c.transmission.k_lo},
                       {"k_hi", c.transmission.k_hi},
                       {"step_fraction", c.transmission.step_fraction}};
  j["calibration"] = {{"target_lo", c.calibration.target_lo},
                      {"target_hi", c.calibration.target_hi},
                      {"delta_mu", c.calibration.delta_mu},
                      {"w_start", c.calibration.w_start},
                      {"w_max", c.calibration.w_max},
                      {"iterations", c.calibration.iterations}};
  j["rmap"] = {{"length", c.rmap.length}, {"points", c.rmap.points}};
  j["output_dir"] = c.output_dir;
  j["cache_dir"] = c.cache_dir;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  // output/cache locations do not change any emitted number
  ExperimentConfig c = config;
  c.output_dir.clear();
  c.cache_dir.clear();
  const std::string text = config_to_json(c);
  std::uint64_t h = CorrelationCache::hash(text);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ness
