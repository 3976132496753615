#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ness/correlation.hpp"
#include "ness/entanglement.hpp"
#include "ness/identity.hpp"
#include "ness/lattice.hpp"
#include "ness/quadrature.hpp"
#include "ness/scattering.hpp"

namespace ness {

inline constexpr const char* kCodeVersion = "ness-entropy 1.0.0";

struct TransmissionSettings {
  double k_lo = 0.55;
  double k_hi = 1.16;
  /// Grid step as a fraction of peak_spacing (<= 1/16).
  double step_fraction = 1.0 / 32.0;
};

struct CalibrationSettings {
  double target_lo = 0.3;
  double target_hi = 0.7;
  double delta_mu = 0.9;
  double w_start = 0.05;
  double w_max = 4.0;
  int iterations = 40;
};

struct RmapSettings {
  int length = 101;
  int points = 200;
};

struct ExperimentConfig {
  int wire_length = 401;
  /// 0: derived from the largest requested subsystem.
  int window_halfwidth = 0;
  std::vector<double> strengths{0.08};
  double mu_bar = -1.25;
  std::vector<double> bias{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<int> lengths{25,  51,  75,  101, 125, 151, 175, 201,
                           225, 251, 275, 301, 325, 351, 375, 401};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  /// Panels per unit k; 0 means peak_spacing / 8 for the wire.
  QuadratureSpec quadrature{0, 8, 1e-6, 4};
  double regime_ratio = 10.0;
  std::vector<std::pair<double, double>> eta_pairs{
      {0.9, 0.8}, {0.8, 0.7}, {0.6, 0.5}, {0.3, 0.2}, {0.2, 0.1}};
  /// Lower end of the L range used for the eta properties.
  int eta_min_length = 50;
  std::vector<int> reservoir_lengths{401, 501, 601, 701, 801, 901, 1001, 1101, 1201};
  std::vector<int> identity_lengths{51, 101};
  std::vector<int> ridge_lengths{201, 401, 801, 1201};
  bool include_bound_states = true;
  double wavefunction_k = 0.82128;
  TransmissionSettings transmission;
  CalibrationSettings calibration;
  RmapSettings rmap;
  std::string output_dir = "ness-out";
  std::string cache_dir;

  WireGeometry geometry(int max_length) const;
  QuadratureSpec resolved_quadrature() const;
  ReservoirFilling filling(double delta_mu) const {
    return ReservoirFilling::from_bias(mu_bar, delta_mu);
  }
  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// JSON <-> config; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical JSON form, hex.
std::string config_hash(const ExperimentConfig& config);

struct RunOptions {
  int threads = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const std::string&)> log;
};

struct SweepRecord {
  double strength = 0.0;
  std::uint64_t seed = 0;
  double delta_mu = 0.0;
  int L = 0;
  double entropy = 0.0;
  double number_variance = 0.0;
  /// S_L with the bound-state projector removed from C.
  double entropy_without_bound = 0.0;
  /// Conductance; at zero bias the transmittance at k_F.
  double conductance = 0.0;
  Regime regime = Regime::NearEquilibrium;
  int bound_states = 0;
  bool lower_ok = true;
  std::optional<double> c_estimate;
};

struct EnsembleRow {
  double strength = 0.0;
  double delta_mu = 0.0;
  int L = 0;
  int samples = 0;
  double entropy_mean = 0.0;
  double entropy_std = 0.0;
  double variance_mean = 0.0;
  double variance_std = 0.0;
};

struct CellFailure {
  double strength = 0.0;
  std::uint64_t seed = 0;
  double delta_mu = 0.0;
  std::string message;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepRecord> records;
  std::vector<EnsembleRow> summary;
  std::vector<CellFailure> failures;

  /// Ensemble-mean curve (or a single seed's) at (W, dmu).
  EntropyCurve curve(double strength, double delta_mu,
                     std::optional<std::uint64_t> seed = std::nullopt) const;
};

SweepResult run_entropy_sweep(const ExperimentConfig& config, const RunOptions& options = {});
std::vector<EnsembleRow> ensemble_summary(const std::vector<SweepRecord>& records);

std::string records_csv(const std::vector<SweepRecord>& records);
std::string summary_csv(const std::vector<EnsembleRow>& rows);
std::vector<SweepRecord> parse_records_csv(const std::string& text);
/// Writes records.csv, summary.csv and manifest.json into `directory`.
void write_sweep(const SweepResult& result, const std::filesystem::path& directory);

struct EtaTable {
  double strength = 0.0;
  double delta_mu = 0.0;
  double delta_mu_prime = 0.0;
  bool far_from_equilibrium = false;
  std::vector<int> lengths;
  std::vector<double> mean;
  std::vector<double> std;
  /// (i) error bars overlap the other pairs' curves at >= 80% of L points.
  bool independent = false;
  double overlap_fraction = 0.0;
  /// (ii) decreasing isotonic fit explains the mean with RMS <= mean std.
  bool decreasing = false;
  double isotonic_rms = 0.0;
  /// (iii) min eta >= 0.05 and max eta <= 2.5 min eta.
  bool bounded = false;
  double a = 0.0;
  double max_eta = 0.0;

  bool all_properties() const { return independent && decreasing && bounded; }
};

struct EtaAnalysis {
  std::vector<EtaTable> tables;
};

/// Per-seed eta curves averaged over the ensemble, restricted to
/// eta_min_length <= L <= L_C, with property verdicts. Pairs are compared
/// against the far-from-equilibrium pairs for property (i).
EtaAnalysis run_eta_analysis(const SweepResult& sweep,
                             const std::vector<std::pair<double, double>>& pairs);

/// Non-increasing least-squares fit (pool adjacent violators).
std::vector<double> isotonic_decreasing(const std::vector<double>& values);

std::string eta_csv(const EtaAnalysis& analysis);

struct ReservoirFit {
  double strength = 0.0;
  double delta_mu = 0.0;
  ScalingFit fit;
  double eta_at_wire = 0.0;
  /// Log slope and its standard error of the zero-bias curve, same range.
  double equilibrium_slope = 0.0;
  double equilibrium_slope_error = 0.0;
};

struct ReservoirScan {
  SweepResult sweep;
  std::vector<ReservoirFit> fits;
};

ReservoirScan run_reservoir_scan(const ExperimentConfig& config,
                                 const RunOptions& options = {});

struct CalibrationPoint {
  double strength = 0.0;
  double mean_conductance = 0.0;
};

struct Calibration {
  double strength = 0.0;
  double mean_conductance = 0.0;
  std::vector<CalibrationPoint> table;
};

/// Bisection on W for a seed-averaged conductance inside [target_lo, target_hi].
Calibration calibrate_W(const ExperimentConfig& config, double target_lo, double target_hi,
                        const RunOptions& options = {});

/// Seed-averaged conductance at (W, mu_bar, calibration.delta_mu).
double mean_conductance(const ExperimentConfig& config, double strength,
                        const RunOptions& options = {});

/// Ensemble-mean ridge values for each length: q at ridge_offset(L), p at
/// p_ridge_offset(L, L_C).
struct RidgeScaling {
  double strength = 0.0;
  double delta_mu = 0.0;
  std::vector<int> lengths;
  std::vector<double> p_ridge;
  std::vector<double> q_ridge;
};

RidgeScaling ridge_scaling(const ExperimentConfig& config, double strength,
                           double delta_mu, const std::vector<int>& lengths,
                           const RunOptions& options = {});

/// "%.15g"; the single number format of every emitted CSV.
std::string format_number(double value);

}  // namespace ness
