// ness-entropy: command-line driver for the NESS entanglement experiments.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ness/errors.hpp"
#include "ness/experiment.hpp"

namespace fs = std::filesystem;
using namespace ness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartial = 4;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<std::string> out;
  std::optional<std::string> cache_dir;
  int threads = 1;
  std::optional<double> k;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "experiment configuration (JSON)")->required();
  sub->add_option("--seed", args.seed, "disorder seed (first seed of the ensemble)");
  sub->add_option("--samples", args.samples, "ensemble size")->check(CLI::PositiveNumber);
  sub->add_option("--out", args.out, "output directory");
  sub->add_option("--cache-dir", args.cache_dir, "correlation cache directory");
  sub->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

struct Context {
  ExperimentConfig config;
  RunOptions options;
  fs::path out;
};

Context make_context(const CommonArgs& args) {
  Context ctx;
  ctx.config = load_config(args.config);
  if (args.samples || args.seed) {
    const std::uint64_t first = args.seed.value_or(1);
    const int n = args.samples.value_or(args.seed ? 1 : static_cast<int>(ctx.config.seeds.size()));
    ctx.config.seeds.clear();
    for (int i = 0; i < n; ++i) ctx.config.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  if (args.out) ctx.config.output_dir = *args.out;
  if (args.cache_dir) ctx.config.cache_dir = *args.cache_dir;
  if (const char* env = std::getenv("NESS_ENTROPY_CACHE"); env && *env) {
    ctx.config.cache_dir = env;
  }
  ctx.config.validate();
  ctx.options.threads = args.threads;
  if (!ctx.config.cache_dir.empty()) ctx.options.cache_dir = fs::path(ctx.config.cache_dir);
  ctx.options.log = [](const std::string& line) { std::cerr << line << '\n'; };
  ctx.out = ctx.config.output_dir;
  fs::create_directories(ctx.out);
  return ctx;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << '\n';
}

std::string num(double v) { return format_number(v); }

DisorderRealization first_sample(const Context& ctx) {
  return draw_disorder(ctx.config.seeds.front(), ctx.config.strengths.front(),
                       WireGeometry(ctx.config.wire_length));
}

int cmd_wavefunction(const Context& ctx, std::optional<double> k_arg) {
  const double k = k_arg.value_or(ctx.config.wavefunction_k);
  const DisorderRealization d = first_sample(ctx);
  const ScatteringState s = solve_scattering(d, k);
  const int h = d.geometry.wire_halfwidth();
  const int extent = h + h / 2;
  std::ostringstream csv;
  csv << "x,abs2,re,im,incoming_abs2,outgoing_abs2\n";
  // in the leads the state splits into the incident wave and the outgoing part
  const bool from_left = k > 0;
  for (int x = -extent; x <= extent; ++x) {
    const cdouble v = s.at(x);
    csv << x << ',' << num(std::norm(v)) << ',' << num(v.real()) << ',' << num(v.imag())
        << ',';
    const bool incident_side = from_left ? x < -h : x > h;
    const bool transmitted_side = from_left ? x > h : x < -h;
    if (incident_side) {
      csv << "1," << num(s.reflectance());
    } else if (transmitted_side) {
      csv << "0," << num(s.transmittance());
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  write_file(ctx.out / "wavefunction.csv", csv.str());
  std::cout << "k=" << num(k) << " E=" << num(s.energy) << " |t|^2=" << num(s.transmittance())
            << " |r|^2=" << num(s.reflectance()) << '\n';
  return kExitOk;
}

int cmd_transmission(const Context& ctx) {
  const DisorderRealization d = first_sample(ctx);
  const auto& ts = ctx.config.transmission;
  const TransmissionCurve curve =
      transmission_curve(d, ts.k_lo, ts.k_hi, ts.step_fraction * peak_spacing(d.geometry));
  std::ostringstream csv;
  csv << "k,transmittance\n";
  for (Eigen::Index i = 0; i < curve.k.size(); ++i) {
    csv << num(curve.k[i]) << ',' << num(curve.transmittance[i]) << '\n';
  }
  write_file(ctx.out / "transmission.csv", csv.str());
  std::ostringstream peaks;
  peaks << "k_peak\n";
  for (double p : curve.peaks) peaks << num(p) << '\n';
  write_file(ctx.out / "transmission_peaks.csv", peaks.str());
  std::cout << "peaks=" << curve.peaks.size()
            << " mean_spacing=" << num(curve.mean_peak_spacing())
            << " 2pi/L_C=" << num(peak_spacing(d.geometry)) << '\n';
  return kExitOk;
}

int cmd_conductance(const Context& ctx) {
  const WireGeometry geometry(ctx.config.wire_length);
  const QuadratureSpec quad = ctx.config.resolved_quadrature();
  std::ostringstream csv;
  csv << "strength,seed,delta_mu,G,regime\n";
  for (double w : ctx.config.strengths) {
    for (std::uint64_t seed : ctx.config.seeds) {
      const DisorderRealization d = draw_disorder(seed, w, geometry);
      for (double dm : ctx.config.bias) {
        const ReservoirFilling f = ctx.config.filling(dm);
        const double g = dm > 0.0 ? conductance(d, f, quad)
                                  : std::norm(lead_coefficients(d, f.k_fermi_plus()).t);
        const Regime regime = classify_regime(f, geometry, ctx.config.regime_ratio);
        csv << num(w) << ',' << seed << ',' << num(dm) << ',' << num(g) << ','
            << to_string(regime) << '\n';
        std::cout << "W=" << num(w) << " seed=" << seed << " dmu=" << num(dm)
                  << " G=" << num(g) << '\n';
      }
    }
  }
  write_file(ctx.out / "conductance.csv", csv.str());
  return kExitOk;
}

int report_failures(const SweepResult& sweep) {
  if (sweep.failures.empty()) return kExitOk;
  std::cerr << sweep.failures.size() << " cell(s) failed:\n";
  for (const CellFailure& f : sweep.failures) {
    std::cerr << "  W=" << num(f.strength) << " seed=" << f.seed << " dmu=" << num(f.delta_mu)
              << ": " << f.message << '\n';
  }
  return kExitPartial;
}

int cmd_entropy_sweep(const Context& ctx) {
  const SweepResult sweep = run_entropy_sweep(ctx.config, ctx.options);
  write_sweep(sweep, ctx.out);
  for (double w : ctx.config.strengths) {
    for (double dm : ctx.config.bias) {
      const EntropyCurve c = sweep.curve(w, dm);
      if (c.lengths.size() < 4) continue;
      const ScalingFit fit = fit_log_law(c);
      std::cout << "W=" << num(w) << " dmu=" << num(dm) << " log-law alpha="
                << num(fit.coefficients[0]) << " residual_rms=" << num(fit.residual_rms) << '\n';
    }
  }
  return report_failures(sweep);
}

// Reuses a sweep in the output directory when its manifest matches the config.
SweepResult sweep_for(const Context& ctx) {
  const fs::path records = ctx.out / "records.csv";
  const fs::path manifest = ctx.out / "manifest.json";
  if (fs::exists(records) && fs::exists(manifest)) {
    std::ifstream m(manifest);
    const nlohmann::json j = nlohmann::json::parse(m, nullptr, false);
    if (!j.is_discarded() && j.value("config_hash", "") == config_hash(ctx.config) &&
        j.value("failures", nlohmann::json::array()).empty()) {
      std::ifstream in(records);
      std::stringstream text;
      text << in.rdbuf();
      SweepResult sweep;
      sweep.config = ctx.config;
      sweep.records = parse_records_csv(text.str());
      sweep.summary = ensemble_summary(sweep.records);
      std::cout << "reusing " << records.string() << '\n';
      return sweep;
    }
  }
  SweepResult sweep = run_entropy_sweep(ctx.config, ctx.options);
  write_sweep(sweep, ctx.out);
  return sweep;
}

int cmd_eta(const Context& ctx) {
  const SweepResult sweep = sweep_for(ctx);
  const EtaAnalysis analysis = run_eta_analysis(sweep, ctx.config.eta_pairs);
  write_file(ctx.out / "eta.csv", eta_csv(analysis));
  std::ostringstream verdicts;
  verdicts << "strength,delta_mu,delta_mu_prime,far_from_equilibrium,a,max_eta,"
              "overlap_fraction,isotonic_rms,independent,decreasing,bounded\n";
  for (const EtaTable& t : analysis.tables) {
    verdicts << num(t.strength) << ',' << num(t.delta_mu) << ',' << num(t.delta_mu_prime)
             << ',' << t.far_from_equilibrium << ',' << num(t.a) << ',' << num(t.max_eta)
             << ',' << num(t.overlap_fraction) << ',' << num(t.isotonic_rms) << ','
             << t.independent << ',' << t.decreasing << ',' << t.bounded << '\n';
    std::cout << "pair (" << num(t.delta_mu) << ", " << num(t.delta_mu_prime) << ") "
              << (t.far_from_equilibrium ? "far" : "near") << " a=" << num(t.a)
              << " (i)=" << t.independent << " (ii)=" << t.decreasing
              << " (iii)=" << t.bounded << '\n';
  }
  write_file(ctx.out / "eta_verdicts.csv", verdicts.str());
  return report_failures(sweep);
}

int cmd_identity_check(const Context& ctx) {
  const WireGeometry geometry(ctx.config.wire_length);
  const QuadratureSpec quad = ctx.config.resolved_quadrature();
  IdentityOptions iopts;
  iopts.threads = ctx.options.threads;
  CorrelationOptions copts;
  copts.threads = ctx.options.threads;
  const int max_length =
      *std::max_element(ctx.config.identity_lengths.begin(), ctx.config.identity_lengths.end());
  std::ostringstream csv;
  csv << "strength,seed,delta_mu,L,trace_form,identity_form,bound_pairs,relative_gap\n";
  int worst = kExitOk;
  for (double w : ctx.config.strengths) {
    for (std::uint64_t seed : ctx.config.seeds) {
      const DisorderRealization d = draw_disorder(seed, w, geometry);
      for (double dm : ctx.config.bias) {
        const ReservoirFilling f = ctx.config.filling(dm);
        const CorrelationMatrix c = build_correlation(d, f, quad, max_length / 2, copts);
        for (int L : ctx.config.identity_lengths) {
          const double trace = entanglement_report(c, L, true).number_variance;
          const IdentityResult id = integrate_identity(d, f, L, quad, iopts);
          const double total = id.value + id.bound_pairs;
          const double gap = std::abs(total - trace) / std::abs(trace);
          csv << num(w) << ',' << seed << ',' << num(dm) << ',' << L << ',' << num(trace)
              << ',' << num(total) << ',' << num(id.bound_pairs) << ',' << num(gap) << '\n';
          std::cout << "W=" << num(w) << " seed=" << seed << " dmu=" << num(dm) << " L=" << L
                    << " Tr C(1-C)=" << num(trace) << " integral=" << num(total)
                    << " (bound states " << num(id.bound_pairs) << ") gap=" << num(gap)
                    << '\n';
        }
      }
    }
  }
  write_file(ctx.out / "identity.csv", csv.str());
  return worst;
}

int cmd_rmap(const Context& ctx) {
  const DisorderRealization d = first_sample(ctx);
  const int n = ctx.config.rmap.points;
  Eigen::VectorXd k(n);
  // midpoints of (-pi, pi] avoid the degenerate wavenumbers 0 and pi
  for (int i = 0; i < n; ++i) k[i] = -std::numbers::pi + (i + 0.5) * 2.0 * std::numbers::pi / n;
  const Eigen::MatrixXd r = r_map(d, ctx.config.rmap.length, k, k);
  std::ostringstream csv;
  csv << "k1,k2,R\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      csv << num(k[i]) << ',' << num(k[j]) << ',' << num(r(i, j)) << '\n';
    }
  }
  write_file(ctx.out / "rmap.csv", csv.str());
  return kExitOk;
}

int cmd_ridge(const Context& ctx) {
  std::ostringstream profiles;
  profiles << "strength,seed,delta_mu,axis,L,offset,R_tilde\n";
  const WireGeometry geometry(ctx.config.wire_length);
  const int npts = 41;
  for (double w : ctx.config.strengths) {
    for (double dm : ctx.config.bias) {
      if (dm <= 0.0) continue;
      const ReservoirFilling f = ctx.config.filling(dm);
      const DisorderRealization d = draw_disorder(ctx.config.seeds.front(), w, geometry);
      for (int L : ctx.config.ridge_lengths) {
        std::vector<double> offsets;
        const double span = 8.0 * ridge_offset(L);
        for (int i = 0; i < npts; ++i) offsets.push_back(-span + 2.0 * span * i / (npts - 1));
        for (RidgeAxis axis : {RidgeAxis::P, RidgeAxis::Q}) {
          const RidgeProfile p = ridge_profile(d, f, L, axis, offsets);
          for (std::size_t i = 0; i < offsets.size(); ++i) {
            profiles << num(w) << ',' << ctx.config.seeds.front() << ',' << num(dm) << ','
                     << to_string(axis) << ',' << L << ',' << num(p.offsets[i]) << ','
                     << num(p.values[i]) << '\n';
          }
        }
      }
      const RidgeScaling rs = ridge_scaling(ctx.config, w, dm, ctx.config.ridge_lengths,
                                            ctx.options);
      const SaturationReport rep =
          saturation_from_ridges(ctx.config.wire_length, rs.lengths, rs.p_ridge, rs.q_ridge);
      std::ostringstream scaling;
      scaling << "L,p_ridge,q_ridge\n";
      for (std::size_t i = 0; i < rs.lengths.size(); ++i) {
        scaling << rs.lengths[i] << ',' << num(rs.p_ridge[i]) << ',' << num(rs.q_ridge[i])
                << '\n';
      }
      write_file(ctx.out / ("ridge_scaling_W" + num(w) + "_dmu" + num(dm) + ".csv"),
                 scaling.str());
      std::cout << "W=" << num(w) << " dmu=" << num(dm) << " p-exponent beyond L_C="
                << (rep.p_exponent_beyond_wire ? num(*rep.p_exponent_beyond_wire) : "n/a")
                << " q-exponent beyond L_C="
                << (rep.q_exponent_beyond_wire ? num(*rep.q_exponent_beyond_wire) : "n/a")
                << " saturates=" << rep.saturates << '\n';
    }
  }
  write_file(ctx.out / "ridge_profiles.csv", profiles.str());
  return kExitOk;
}

int cmd_reservoir_scan(const Context& ctx) {
  const ReservoirScan scan = run_reservoir_scan(ctx.config, ctx.options);
  write_sweep(scan.sweep, ctx.out);
  std::ostringstream csv;
  csv << "strength,delta_mu,offset,offset_error,predicted_offset,eta_at_wire,alpha,"
         "alpha_error,equilibrium_alpha,equilibrium_alpha_error\n";
  for (const ReservoirFit& f : scan.fits) {
    csv << num(f.strength) << ',' << num(f.delta_mu) << ',' << num(f.fit.offset) << ','
        << num(f.fit.offset_error) << ',' << num(f.fit.predicted_offset) << ','
        << num(f.eta_at_wire) << ',' << num(f.fit.coefficients[0]) << ','
        << num(f.fit.standard_errors[0]) << ',' << num(f.equilibrium_slope) << ','
        << num(f.equilibrium_slope_error) << '\n';
    std::cout << "W=" << num(f.strength) << " dmu=" << num(f.delta_mu)
              << " offset=" << num(f.fit.offset) << " predicted=" << num(f.fit.predicted_offset)
              << " alpha=" << num(f.fit.coefficients[0])
              << " alpha_eq=" << num(f.equilibrium_slope) << '\n';
  }
  write_file(ctx.out / "reservoir.csv", csv.str());
  return report_failures(scan.sweep);
}

int cmd_calibrate(const Context& ctx) {
  const auto& cal = ctx.config.calibration;
  const Calibration result = calibrate_W(ctx.config, cal.target_lo, cal.target_hi, ctx.options);
  std::ostringstream csv;
  csv << "strength,mean_G\n";
  for (const CalibrationPoint& p : result.table) {
    csv << num(p.strength) << ',' << num(p.mean_conductance) << '\n';
  }
  write_file(ctx.out / "calibration.csv", csv.str());
  std::cout << "recommended W=" << num(result.strength)
            << " mean G=" << num(result.mean_conductance) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement entropy of disordered-wire nonequilibrium steady states"};
  app.require_subcommand(1);
  CommonArgs args;
  const char* names[] = {"wavefunction", "identity-check", "transmission", "rmap",
                         "conductance",  "ridge",          "entropy-sweep", "reservoir-scan",
                         "eta",          "calibrate-w"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, args);
    if (std::string(name) == "wavefunction") {
      sub->add_option("--k", args.k, "incident wavenumber in (-pi, pi]");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const Context ctx = make_context(args);
    if (cmd == "wavefunction") return cmd_wavefunction(ctx, args.k);
    if (cmd == "transmission") return cmd_transmission(ctx);
    if (cmd == "conductance") return cmd_conductance(ctx);
    if (cmd == "entropy-sweep") return cmd_entropy_sweep(ctx);
    if (cmd == "eta") return cmd_eta(ctx);
    if (cmd == "identity-check") return cmd_identity_check(ctx);
    if (cmd == "rmap") return cmd_rmap(ctx);
    if (cmd == "ridge") return cmd_ridge(ctx);
    if (cmd == "reservoir-scan") return cmd_reservoir_scan(ctx);
    if (cmd == "calibrate-w") return cmd_calibrate(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const QuadratureError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConsistencyError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const OverflowError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
