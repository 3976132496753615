// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all nine.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ness/experiment.hpp"

using namespace ness;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void note(const std::string& line) { std::cerr << "  " << line << std::endl; }

const ExperimentConfig& default_config() {
  static const ExperimentConfig config = parse_config("{}");
  return config;
}

RunOptions threads(int n) {
  RunOptions o;
  o.threads = n;
  return o;
}

// The default sweep, computed once and shared by criteria 3, 5, 6 and 9.
const SweepResult& default_sweep() {
  static const SweepResult sweep = [] {
    note("default sweep, 1 worker");
    return run_entropy_sweep(default_config(), threads(1));
  }();
  return sweep;
}

Verdict clean_oracle() {
  const WireGeometry g(401);
  const DisorderRealization d = draw_disorder(1, 0.0, g);
  const QuadratureSpec q = QuadratureSpec::for_geometry(g);
  double worst = 0.0;
  for (double dm : {0.0, 0.9}) {
    const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, dm);
    const CorrelationMatrix c = build_correlation(d, f, q, 400);
    for (int x = -400; x <= 400; ++x) {
      for (int y = -400; y <= 400; ++y) {
        worst = std::max(worst, std::abs(c(x, y) - clean_kernel(f, x, y)));
      }
    }
  }
  return {worst < 1e-6, "801 sites, max |C - C_clean| = " + num(worst)};
}

Verdict unitarity() {
  const WireGeometry g(401);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uniform(1e-6, std::numbers::pi - 1e-6);
  double worst_unitarity = 0.0, worst_reciprocity = 0.0;
  int samples = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DisorderRealization d = draw_disorder(seed, 0.08, g);
    for (int i = 0; i < 1000; ++i, ++samples) {
      const double k = uniform(rng);
      const LeadCoefficients left = lead_coefficients(d, k);
      const LeadCoefficients right = lead_coefficients(d, -k);
      worst_unitarity = std::max(
          {worst_unitarity, std::abs(std::norm(left.r) + std::norm(left.t) - 1.0),
           std::abs(std::norm(right.r) + std::norm(right.t) - 1.0)});
      worst_reciprocity =
          std::max(worst_reciprocity, std::abs(std::norm(left.t) - std::norm(right.t)));
    }
  }
  return {worst_unitarity < 1e-10 && worst_reciprocity < 1e-10,
          std::to_string(samples) + " k x 2 directions, max ||r|^2+|t|^2-1| = " +
              num(worst_unitarity) + ", max ||t_k|^2-|t_-k|^2| = " + num(worst_reciprocity)};
}

Verdict inequality() {
  const SweepResult& sweep = default_sweep();
  std::vector<int> lengths = default_config().lengths;
  std::sort(lengths.begin(), lengths.end());
  std::set<int> even;
  for (std::size_t i = 0; i < lengths.size(); i += 2) even.insert(lengths[i]);
  bool lower = sweep.failures.empty() && !sweep.records.empty();
  bool finite = true;
  double c_even = 0.0, c_odd = 0.0;
  for (const SweepRecord& r : sweep.records) {
    lower = lower && r.number_variance <= r.entropy + 1e-12;
    if (!r.c_estimate || !std::isfinite(*r.c_estimate)) {
      finite = false;
      continue;
    }
    double& c = even.count(r.L) ? c_even : c_odd;
    c = std::max(c, *r.c_estimate);
  }
  const double spread = std::abs(c_even - c_odd) / std::max(c_even, c_odd);
  return {lower && finite && spread < 0.2,
          std::to_string(sweep.records.size()) + " records, lower bound " +
              (lower ? "holds" : "violated") + ", c = " + num(c_even) + " / " + num(c_odd) +
              " on interleaved L halves (spread " + num(spread) + ")"};
}

Verdict table_iii() {
  ExperimentConfig clean = default_config();
  clean.strengths = {0.0};
  clean.bias = {0.0, 0.9};
  note("clean sweep");
  const SweepResult a = run_entropy_sweep(clean, threads(1));
  const SweepResult& b = default_sweep();
  if (!a.failures.empty() || !b.failures.empty()) return {false, "sweep cells failed"};

  const ScalingFit fa = fit_log_law(a.curve(0.0, 0.0));
  const ScalingFit fb = fit_log_law(a.curve(0.0, 0.9));
  const ScalingFit fc = fit_log_law(b.curve(0.08, 0.0));
  const EntropyCurve dcurve = b.curve(0.08, 0.9);
  const ScalingFit fd = fit_log_law(dcurve);

  auto log_law = [](const ScalingFit& f) {
    return f.residual_rms < 0.05 && f.coefficients[0] >= 0.2 && f.coefficients[0] <= 0.45;
  };
  const bool A = log_law(fa);
  const bool B = log_law(fb);
  const bool C = fc.residual_rms < 3.0 * fa.residual_rms;

  const EntropyCurve ccurve = b.curve(0.08, 0.0);
  const auto at401 = [](const EntropyCurve& c) {
    const auto it = std::find(c.lengths.begin(), c.lengths.end(), 401);
    return c.entropy[static_cast<Eigen::Index>(it - c.lengths.begin())];
  };
  const double excess = at401(dcurve) - at401(ccurve);
  const double required = 0.5 * 0.1 * 401 * default_config().filling(0.9).delta_kf();
  const bool D = fd.residual_rms >= 5.0 * fc.residual_rms && excess >= required;

  std::ostringstream s;
  s << "[A] rms " << num(fa.residual_rms) << " slope " << num(fa.coefficients[0])
    << (A ? " ok" : " FAIL") << "; [B] rms " << num(fb.residual_rms) << " slope "
    << num(fb.coefficients[0]) << (B ? " ok" : " FAIL") << "; [C] rms " << num(fc.residual_rms)
    << (C ? " ok" : " FAIL") << "; [D] rms " << num(fd.residual_rms) << " excess at 401 "
    << num(excess) << " >= " << num(required) << (D ? " ok" : " FAIL");
  return {A && B && C && D, s.str()};
}

Verdict identity_closure() {
  const WireGeometry g(401);
  const QuadratureSpec q = QuadratureSpec::for_geometry(g);
  bool pass = true;
  std::ostringstream s;
  for (double w : {0.0, 0.08}) {
    const double tolerance = w == 0.0 ? 1e-3 : 1e-2;
    const DisorderRealization d = draw_disorder(1, w, g);
    for (double dm : {0.0, 0.6}) {
      const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, dm);
      const CorrelationMatrix c = build_correlation(d, f, q, 50);
      for (int L : {51, 101}) {
        const double trace = entanglement_report(c, L, true).number_variance;
        const IdentityResult id = integrate_identity(d, f, L, q);
        const double gap = std::abs(id.value + id.bound_pairs - trace) / trace;
        const double bare = std::abs(id.value - trace) / trace;
        note("W=" + num(w) + " dmu=" + num(dm) + " L=" + std::to_string(L) +
             " trace=" + num(trace) + " gap=" + num(gap) + " scattering-only gap=" + num(bare));
        pass = pass && gap < tolerance;
        s << " W=" << num(w) << ",dmu=" << num(dm) << ",L=" << L << ":" << num(gap);
      }
    }
  }
  return {pass, "relative gaps" + s.str()};
}

Verdict eta_properties() {
  ExperimentConfig extra = default_config();
  extra.bias = {0.002, 0.05};
  note("near-equilibrium sweep");
  const SweepResult near = run_entropy_sweep(extra, threads(1));
  SweepResult merged = default_sweep();
  merged.records.insert(merged.records.end(), near.records.begin(), near.records.end());
  merged.failures.insert(merged.failures.end(), near.failures.begin(), near.failures.end());
  merged.config.bias.insert(merged.config.bias.end(), extra.bias.begin(), extra.bias.end());

  std::vector<std::pair<double, double>> pairs = default_config().eta_pairs;
  pairs.push_back({0.05, 0.0});
  pairs.push_back({0.002, 0.0});
  const EtaAnalysis analysis = run_eta_analysis(merged, pairs);
  const WireGeometry g(default_config().wire_length);
  int far = 0, near_pairs = 0;
  bool pass = merged.failures.empty();
  std::ostringstream s;
  for (const EtaTable& t : analysis.tables) {
    const bool is_near =
        classify_regime(default_config().filling(t.delta_mu), g) == Regime::NearEquilibrium ||
        classify_regime(default_config().filling(t.delta_mu_prime), g) ==
            Regime::NearEquilibrium;
    note("(" + num(t.delta_mu) + ", " + num(t.delta_mu_prime) + ") a=" + num(t.a) +
         " max=" + num(t.max_eta) + " overlap=" + num(t.overlap_fraction) +
         " iso_rms=" + num(t.isotonic_rms) + " (i)" + std::to_string(t.independent) +
         " (ii)" + std::to_string(t.decreasing) + " (iii)" + std::to_string(t.bounded));
    if (t.far_from_equilibrium) {
      ++far;
      pass = pass && t.all_properties();
      s << " far(" << num(t.delta_mu) << "," << num(t.delta_mu_prime) << ")"
        << (t.all_properties() ? "=all" : "=missing");
    } else if (is_near) {
      ++near_pairs;
      pass = pass && !t.all_properties();
      s << " near(" << num(t.delta_mu) << "," << num(t.delta_mu_prime) << ")"
        << (t.all_properties() ? "=all" : "=violates");
    }
  }
  return {pass && far > 0 && near_pairs > 0, "pairs" + s.str()};
}

Verdict ridge_exponents() {
  ExperimentConfig config = default_config();
  const std::vector<int> lengths{51, 75, 101, 151, 201};
  bool pass = true;
  std::ostringstream s;
  for (double w : {0.0, 0.08}) {
    for (double dm : {0.3, 0.6, 0.9}) {
      const RidgeScaling r = ridge_scaling(config, w, dm, lengths);
      const double p = growth_exponent(r.p_ridge.front(), lengths.front(), r.p_ridge.back(),
                                       lengths.back());
      const double q = growth_exponent(r.q_ridge.front(), lengths.front(), r.q_ridge.back(),
                                       lengths.back());
      const bool p_ok = w == 0.0 ? p < 0.5 : (p >= 1.2 && p <= 2.0);
      const bool q_ok = q >= 1.7 && q <= 2.1;
      pass = pass && p_ok && q_ok;
      s << " W=" << num(w) << ",dmu=" << num(dm) << ":p" << num(p) << "/q" << num(q);
    }
  }
  return {pass, "exponents over L 51..201" + s.str()};
}

Verdict reservoir() {
  ExperimentConfig config = default_config();
  config.bias = {0.0, 0.8, 0.9};
  note("reservoir scan");
  const ReservoirScan scan = run_reservoir_scan(config, threads(1));
  bool pass = scan.sweep.failures.empty() && !scan.fits.empty();
  std::ostringstream s;
  for (const ReservoirFit& f : scan.fits) {
    const double ratio = f.fit.offset / f.fit.predicted_offset;
    const bool ok = std::isfinite(f.fit.offset) && std::abs(ratio - 1.0) < 0.3;
    pass = pass && ok;
    s << " dmu=" << num(f.delta_mu) << ": offset " << num(f.fit.offset) << " vs "
      << num(f.fit.predicted_offset);
  }
  for (double dm : {0.8, 0.9}) {
    const RidgeScaling r = ridge_scaling(config, 0.08, dm, {401, 601, 801, 1001, 1201});
    const SaturationReport rep =
        saturation_from_ridges(config.wire_length, r.lengths, r.p_ridge, r.q_ridge);
    const bool ok = rep.p_exponent_beyond_wire && *rep.p_exponent_beyond_wire < 0.3;
    pass = pass && ok;
    s << "; p exponent past L_C (dmu=" << num(dm) << ") "
      << (rep.p_exponent_beyond_wire ? num(*rep.p_exponent_beyond_wire) : "n/a");
  }
  return {pass, s.str().substr(1)};
}

Verdict determinism() {
  note("default sweep, 8 workers");
  const SweepResult eight = run_entropy_sweep(default_config(), threads(8));
  const std::string a = records_csv(default_sweep().records);
  const std::string b = records_csv(eight.records);
  return {a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"clean-oracle closure", clean_oracle},
      {"unitarity and reciprocity", unitarity},
      {"number-variance lower bound", inequality},
      {"fluctuation identity closure", identity_closure},
      {"entropy scaling table", table_iii},
      {"eta properties", eta_properties},
      {"ridge scaling exponents", ridge_exponents},
      {"reservoir regime", reservoir},
      {"worker-count determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(n)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << n << " [" << criteria[i].first << "]: "
              << (v.pass ? "PASS" : "FAIL") << " - " << v.detail << " (" << num(seconds)
              << " s)" << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
