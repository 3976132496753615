#include "ness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "ness/errors.hpp"
#include "ness/parallel.hpp"

namespace ness {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

namespace {

struct Cell {
  double strength;
  std::uint64_t seed;
  double delta_mu;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void log_line(const RunOptions& options, const std::string& message) {
  if (options.log) options.log(message);
}

std::vector<SweepRecord> run_cell(const ExperimentConfig& config, const Cell& cell,
                                  const WireGeometry& geometry,
                                  const QuadratureSpec& quadrature, int window,
                                  const CorrelationCache* cache) {
  const DisorderRealization disorder = draw_disorder(cell.seed, cell.strength, geometry);
  const ReservoirFilling filling = config.filling(cell.delta_mu);
  const double g =
      cell.delta_mu > 0.0
          ? conductance(disorder, filling, quadrature)
          : std::norm(lead_coefficients(disorder, filling.k_fermi_plus()).t);
  const Regime regime = classify_regime(filling, geometry, config.regime_ratio);
  CorrelationOptions copts;
  copts.include_bound_states = config.include_bound_states;
  const CorrelationMatrix c =
      cached_correlation(cache, disorder, filling, quadrature, window, copts);

  std::vector<SweepRecord> records;
  for (int L : config.lengths) {
    const EntanglementReport report = entanglement_report(c, L);
    SweepRecord r;
    r.strength = cell.strength;
    r.seed = cell.seed;
    r.delta_mu = cell.delta_mu;
    r.L = L;
    r.entropy = report.entropy;
    r.number_variance = report.number_variance;
    r.entropy_without_bound =
        c.bound_states > 0 ? entanglement_report(c, L, false).entropy : report.entropy;
    r.conductance = g;
    r.regime = regime;
    r.bound_states = c.bound_states;
    const InequalityCheck check = check_inequality(report);
    r.lower_ok = check.lower_ok;
    r.c_estimate = check.c_estimate;
    records.push_back(r);
  }
  return records;
}

}  // namespace

std::vector<EnsembleRow> ensemble_summary(const std::vector<SweepRecord>& records) {
  std::map<std::tuple<double, double, int>, std::pair<std::vector<double>, std::vector<double>>>
      groups;
  for (const SweepRecord& r : records) {
    auto& g = groups[{r.strength, r.delta_mu, r.L}];
    g.first.push_back(r.entropy);
    g.second.push_back(r.number_variance);
  }
  std::vector<EnsembleRow> rows;
  for (const auto& [key, values] : groups) {
    EnsembleRow row;
    std::tie(row.strength, row.delta_mu, row.L) = key;
    row.samples = static_cast<int>(values.first.size());
    row.entropy_mean = mean_of(values.first);
    row.entropy_std = std_of(values.first);
    row.variance_mean = mean_of(values.second);
    row.variance_std = std_of(values.second);
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_entropy_sweep(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const int max_length = *std::max_element(config.lengths.begin(), config.lengths.end());
  const WireGeometry geometry = config.geometry(max_length);
  const QuadratureSpec quadrature = config.resolved_quadrature();
  const int window = max_length / 2;
  std::optional<CorrelationCache> cache;
  if (options.cache_dir) cache.emplace(*options.cache_dir);

  std::vector<Cell> cells;
  for (double w : config.strengths) {
    for (std::uint64_t seed : config.seeds) {
      for (double dm : config.bias) cells.push_back({w, seed, dm});
    }
  }
  std::vector<std::vector<SweepRecord>> per_cell(cells.size());
  std::vector<std::optional<CellFailure>> failed(cells.size());
  parallel_for(cells.size(), options.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      per_cell[i] = run_cell(config, cell, geometry, quadrature, window,
                             cache ? &*cache : nullptr);
    } catch (const Error& e) {
      failed[i] = CellFailure{cell.strength, cell.seed, cell.delta_mu, e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream msg;
    msg << "cell W=" << cell.strength << " seed=" << cell.seed
        << " dmu=" << cell.delta_mu << (failed[i] ? " FAILED: " + failed[i]->message : " ok")
        << " (" << seconds << " s)";
    log_line(options, msg.str());
  });

  SweepResult result;
  result.config = config;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.records.insert(result.records.end(), per_cell[i].begin(), per_cell[i].end());
    if (failed[i]) result.failures.push_back(*failed[i]);
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const SweepRecord& a, const SweepRecord& b) {
                     return std::tie(a.strength, a.seed, a.delta_mu, a.L) <
                            std::tie(b.strength, b.seed, b.delta_mu, b.L);
                   });
  result.summary = ensemble_summary(result.records);
  return result;
}

EntropyCurve SweepResult::curve(double strength, double delta_mu,
                                std::optional<std::uint64_t> seed) const {
  std::map<int, std::vector<double>> by_length;
  std::set<std::uint64_t> seeds;
  for (const SweepRecord& r : records) {
    if (r.strength != strength || r.delta_mu != delta_mu) continue;
    if (seed && r.seed != *seed) continue;
    by_length[r.L].push_back(r.entropy);
    seeds.insert(r.seed);
  }
  EntropyCurve c;
  c.seeds.assign(seeds.begin(), seeds.end());
  c.entropy.resize(static_cast<Eigen::Index>(by_length.size()));
  Eigen::Index i = 0;
  for (const auto& [L, values] : by_length) {
    c.lengths.push_back(L);
    c.entropy[i++] = mean_of(values);
  }
  return c;
}

// ---------------------------------------------------------------------------
// persistence

std::string records_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "strength,seed,delta_mu,L,S,dN2,S_without_bound,G,regime,bound_states,lower_ok,"
         "c_estimate\n";
  for (const SweepRecord& r : records) {
    out << format_number(r.strength) << ',' << r.seed << ',' << format_number(r.delta_mu)
        << ',' << r.L << ',' << format_number(r.entropy) << ','
        << format_number(r.number_variance) << ',' << format_number(r.entropy_without_bound)
        << ',' << format_number(r.conductance) << ',' << to_string(r.regime) << ','
        << r.bound_states << ',' << (r.lower_ok ? 1 : 0) << ','
        << (r.c_estimate ? format_number(*r.c_estimate) : std::string()) << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<EnsembleRow>& rows) {
  std::ostringstream out;
  out << "strength,delta_mu,L,samples,S_mean,S_std,dN2_mean,dN2_std\n";
  for (const EnsembleRow& r : rows) {
    out << format_number(r.strength) << ',' << format_number(r.delta_mu) << ',' << r.L
        << ',' << r.samples << ',' << format_number(r.entropy_mean) << ','
        << format_number(r.entropy_std) << ',' << format_number(r.variance_mean) << ','
        << format_number(r.variance_std) << '\n';
  }
  return out.str();
}

std::vector<SweepRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("strength,seed,delta_mu,L,S,", 0) != 0) {
    throw UsageError("not a records CSV file");
  }
  std::vector<SweepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 12) throw UsageError("malformed records CSV row: " + line);
    SweepRecord r;
    r.strength = std::stod(f[0]);
    r.seed = std::stoull(f[1]);
    r.delta_mu = std::stod(f[2]);
    r.L = std::stoi(f[3]);
    r.entropy = std::stod(f[4]);
    r.number_variance = std::stod(f[5]);
    r.entropy_without_bound = std::stod(f[6]);
    r.conductance = std::stod(f[7]);
    if (f[8] == "far-from-equilibrium") {
      r.regime = Regime::FarFromEquilibrium;
    } else if (f[8] == "mesoscopic-fluctuation") {
      r.regime = Regime::MesoscopicFluctuation;
    } else {
      r.regime = Regime::NearEquilibrium;
    }
    r.bound_states = std::stoi(f[9]);
    r.lower_ok = f[10] == "1";
    if (!f[11].empty()) r.c_estimate = std::stod(f[11]);
    records.push_back(r);
  }
  return records;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_sweep(const SweepResult& result, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_text(directory / "records.csv", records_csv(result.records));
  write_text(directory / "summary.csv", summary_csv(result.summary));
  nlohmann::json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config_hash"] = config_hash(result.config);
  manifest["config"] = nlohmann::json::parse(config_to_json(result.config));
  manifest["quadrature_resolved"] = result.config.resolved_quadrature().panels_per_unit_k;
  manifest["created_utc"] = utc_now();
  manifest["records"] = result.records.size();
  manifest["prng"] = "splitmix64 + Box-Muller, potential x = -h..h in order";
  nlohmann::json failures = nlohmann::json::array();
  for (const CellFailure& f : result.failures) {
    failures.push_back({{"strength", f.strength},
                        {"seed", f.seed},
                        {"delta_mu", f.delta_mu},
                        {"message", f.message}});
  }
  manifest["failures"] = failures;
  write_text(directory / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// eta

std::vector<double> isotonic_decreasing(const std::vector<double>& values) {
  struct Block {
    double sum;
    int count;
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum / prev.count >= last.sum / last.count) break;
      const Block merged{prev.sum + last.sum, prev.count + last.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> fit;
  for (const Block& b : blocks) fit.insert(fit.end(), b.count, b.sum / b.count);
  return fit;
}

EtaAnalysis run_eta_analysis(const SweepResult& sweep,
                             const std::vector<std::pair<double, double>>& pairs) {
  const ExperimentConfig& config = sweep.config;
  const WireGeometry geometry(config.wire_length);
  EtaAnalysis analysis;
  for (double w : config.strengths) {
    const std::size_t first = analysis.tables.size();
    for (const auto& [a, b] : pairs) {
      const ReservoirFilling fa = config.filling(a);
      const ReservoirFilling fb = config.filling(b);
      EtaTable table;
      table.strength = w;
      table.delta_mu = a;
      table.delta_mu_prime = b;
      table.far_from_equilibrium =
          classify_regime(fa, geometry, config.regime_ratio) == Regime::FarFromEquilibrium &&
          classify_regime(fb, geometry, config.regime_ratio) == Regime::FarFromEquilibrium;
      std::map<int, std::vector<double>> by_length;
      for (std::uint64_t seed : config.seeds) {
        const EntropyCurve ca = sweep.curve(w, a, seed);
        const EntropyCurve cb = sweep.curve(w, b, seed);
        if (ca.lengths.empty() || ca.lengths != cb.lengths) continue;
        for (const EtaPoint& p : estimate_eta(ca, cb, fa, fb)) {
          if (p.L >= config.eta_min_length && p.L <= config.wire_length) {
            by_length[p.L].push_back(p.eta);
          }
        }
      }
      if (by_length.empty()) {
        throw UsageError("no common seeds for eta pair (" + format_number(a) + ", " +
                         format_number(b) + ")");
      }
      for (const auto& [L, etas] : by_length) {
        table.lengths.push_back(L);
        table.mean.push_back(mean_of(etas));
        table.std.push_back(std_of(etas));
      }
      const std::vector<double> iso = isotonic_decreasing(table.mean);
      double sq = 0.0;
      for (std::size_t i = 0; i < iso.size(); ++i) {
        sq += (iso[i] - table.mean[i]) * (iso[i] - table.mean[i]);
      }
      table.isotonic_rms = std::sqrt(sq / static_cast<double>(iso.size()));
      // slack for round-off when the seeds agree exactly
      const double slack = 1e-12 * std::abs(mean_of(table.mean));
      table.decreasing = table.isotonic_rms <= mean_of(table.std) + slack;
      table.a = *std::min_element(table.mean.begin(), table.mean.end());
      table.max_eta = *std::max_element(table.mean.begin(), table.mean.end());
      table.bounded = table.a >= 0.05 && table.max_eta <= 2.5 * table.a;
      analysis.tables.push_back(std::move(table));
    }
    // (i): compare each pair with the far-from-equilibrium pairs at this W
    for (std::size_t i = first; i < analysis.tables.size(); ++i) {
      EtaTable& t = analysis.tables[i];
      double worst = 1.0;
      bool compared = false;
      for (std::size_t j = first; j < analysis.tables.size(); ++j) {
        const EtaTable& o = analysis.tables[j];
        if (j == i || !o.far_from_equilibrium) continue;
        int overlap = 0, common = 0;
        for (std::size_t u = 0; u < t.lengths.size(); ++u) {
          const auto it = std::find(o.lengths.begin(), o.lengths.end(), t.lengths[u]);
          if (it == o.lengths.end()) continue;
          const std::size_t v = static_cast<std::size_t>(it - o.lengths.begin());
          ++common;
          const double slack = 1e-12 * (std::abs(t.mean[u]) + std::abs(o.mean[v]));
          if (std::abs(t.mean[u] - o.mean[v]) <= t.std[u] + o.std[v] + slack) ++overlap;
        }
        if (common == 0) continue;
        compared = true;
        worst = std::min(worst, static_cast<double>(overlap) / common);
      }
      t.overlap_fraction = compared ? worst : 1.0;
      t.independent = t.overlap_fraction >= 0.8;
    }
  }
  return analysis;
}

std::string eta_csv(const EtaAnalysis& analysis) {
  std::ostringstream out;
  out << "strength,delta_mu,delta_mu_prime,far_from_equilibrium,L,eta_mean,eta_std\n";
  for (const EtaTable& t : analysis.tables) {
    for (std::size_t i = 0; i < t.lengths.size(); ++i) {
      out << format_number(t.strength) << ',' << format_number(t.delta_mu) << ','
          << format_number(t.delta_mu_prime) << ',' << (t.far_from_equilibrium ? 1 : 0)
          << ',' << t.lengths[i] << ',' << format_number(t.mean[i]) << ','
          << format_number(t.std[i]) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// reservoir scan

ReservoirScan run_reservoir_scan(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig scan = config;
  scan.lengths = config.reservoir_lengths;
  if (std::find(scan.lengths.begin(), scan.lengths.end(), config.wire_length) ==
      scan.lengths.end()) {
    scan.lengths.push_back(config.wire_length);
  }
  std::sort(scan.lengths.begin(), scan.lengths.end());
  if (std::find(scan.bias.begin(), scan.bias.end(), 0.0) == scan.bias.end()) {
    scan.bias.insert(scan.bias.begin(), 0.0);
  }
  ReservoirScan out;
  out.sweep = run_entropy_sweep(scan, options);
  const int lc = config.wire_length;
  auto value_at = [lc](const EntropyCurve& c) {
    const auto it = std::find(c.lengths.begin(), c.lengths.end(), lc);
    if (it == c.lengths.end()) throw FitError("curve lacks L = L_C");
    return c.entropy[static_cast<Eigen::Index>(it - c.lengths.begin())];
  };
  for (double w : scan.strengths) {
    const EntropyCurve reference = out.sweep.curve(w, 0.0);
    const ScalingFit eq =
        fit_log_law(reference, FitRange{lc + 1, std::numeric_limits<int>::max()});
    for (double dm : scan.bias) {
      if (dm <= 0.0) continue;
      const EntropyCurve curve = out.sweep.curve(w, dm);
      double partner = 0.0;
      for (const auto& [a, b] : scan.eta_pairs) {
        if (a == dm && std::find(scan.bias.begin(), scan.bias.end(), b) != scan.bias.end()) {
          partner = b;
          break;
        }
      }
      const EntropyCurve other = out.sweep.curve(w, partner);
      if (other.seeds != curve.seeds) throw UsageError("reservoir scan seed mismatch");
      const double dk = config.filling(dm).delta_kf() - config.filling(partner).delta_kf();
      const double eta = (value_at(curve) - value_at(other)) / (dk * lc);
      ReservoirFit rf;
      rf.strength = w;
      rf.delta_mu = dm;
      rf.eta_at_wire = eta;
      rf.fit = reservoir_offset_fit(curve, &reference, eta, lc, config.filling(dm));
      rf.equilibrium_slope = eq.coefficients[0];
      rf.equilibrium_slope_error = eq.standard_errors[0];
      out.fits.push_back(rf);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// calibration and ridges

double mean_conductance(const ExperimentConfig& config, double strength,
                        const RunOptions& options) {
  const WireGeometry geometry(config.wire_length);
  const QuadratureSpec quadrature = config.resolved_quadrature();
  const ReservoirFilling filling = config.filling(config.calibration.delta_mu);
  std::vector<double> g(config.seeds.size());
  parallel_for(config.seeds.size(), options.threads, [&](std::size_t i) {
    g[i] = conductance(draw_disorder(config.seeds[i], strength, geometry), filling,
                       quadrature);
  });
  return mean_of(g);
}

Calibration calibrate_W(const ExperimentConfig& config, double target_lo, double target_hi,
                        const RunOptions& options) {
  if (!(target_lo >= 0.0 && target_lo < target_hi && target_hi <= 1.0)) {
    throw ParameterError("calibration window must satisfy 0 <= lo < hi <= 1");
  }
  Calibration cal;
  auto evaluate = [&](double w) {
    const double g = mean_conductance(config, w, options);
    cal.table.push_back({w, g});
    log_line(options, "calibrate W=" + format_number(w) + " G=" + format_number(g));
    return g;
  };
  auto inside = [&](double g) { return g >= target_lo && g <= target_hi; };
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << why << "; scanned (W, G):";
    for (const auto& p : cal.table) msg << " (" << p.strength << ", " << p.mean_conductance << ")";
    throw CalibrationError(msg.str());
  };

  double lo = 0.0;
  double g = evaluate(0.0);
  if (inside(g)) {
    cal.strength = 0.0;
    cal.mean_conductance = g;
    return cal;
  }
  double hi = config.calibration.w_start;
  for (;;) {
    g = evaluate(hi);
    if (inside(g)) {
      cal.strength = hi;
      cal.mean_conductance = g;
      return cal;
    }
    if (g < target_lo) break;
    lo = hi;
    hi *= 2.0;
    if (hi > config.calibration.w_max) fail("target window not reached below w_max");
  }
  for (int iter = 0; iter < config.calibration.iterations; ++iter) {
    const double mid = 0.5 * (lo + hi);
    g = evaluate(mid);
    if (inside(g)) {
      cal.strength = mid;
      cal.mean_conductance = g;
      return cal;
    }
    if (g > target_hi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  fail("bisection did not land inside the target window");
  return cal;
}

RidgeScaling ridge_scaling(const ExperimentConfig& config, double strength,
                           double delta_mu, const std::vector<int>& lengths,
                           const RunOptions& options) {
  const WireGeometry geometry(config.wire_length);
  const ReservoirFilling filling = config.filling(delta_mu);
  RidgeScaling out;
  out.strength = strength;
  out.delta_mu = delta_mu;
  out.lengths = lengths;
  const std::size_t n = config.seeds.size();
  std::vector<std::vector<double>> p(n), q(n);
  parallel_for(n, options.threads, [&](std::size_t s) {
    const DisorderRealization d = draw_disorder(config.seeds[s], strength, geometry);
    for (int L : lengths) {
      const double p_offset = p_ridge_offset(L, config.wire_length);
      p[s].push_back(ridge_profile(d, filling, L, RidgeAxis::P, {p_offset}).values[0]);
      q[s].push_back(ridge_profile(d, filling, L, RidgeAxis::Q, {ridge_offset(L)}).values[0]);
    }
  });
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    double sp = 0.0, sq = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      sp += p[s][i];
      sq += q[s][i];
    }
    out.p_ridge.push_back(sp / static_cast<double>(n));
    out.q_ridge.push_back(sq / static_cast<double>(n));
  }
  return out;
}

}  // namespace ness
