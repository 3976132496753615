#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ness/lattice.hpp"

namespace ness {

using cdouble = std::complex<double>;

/// Eigenstate of the wire Hamiltonian with unit incident amplitude.
/// k > 0: incident from the left lead, k < 0: incident from the right lead.
/// Amplitudes are stored on the geometry window; at() continues them
/// analytically into the leads.
struct ScatteringState {
  double k = 0.0;
  double energy = 0.0;
  int wire_halfwidth = 0;
  int window_halfwidth = 0;
  Eigen::VectorXcd amplitudes;
  cdouble r;
  cdouble t;
  /// det of the accumulated 2x2 transfer product (exactly 1 in exact arithmetic).
  double transfer_determinant = 1.0;

  cdouble at(int x) const;
  double transmittance() const { return std::norm(t); }
  double reflectance() const { return std::norm(r); }
};

ScatteringState solve_scattering(const DisorderRealization& disorder, double k);

/// Only the lead coefficients (no window amplitudes); used for |t_k|^2 scans.
struct LeadCoefficients {
  cdouble r;
  cdouble t;
};
LeadCoefficients lead_coefficients(const DisorderRealization& disorder, double k);

/// Normalizable state with |energy| > 2, decaying as exp(-kappa |x|) in the
/// leads; unit norm over the whole line.
struct BoundState {
  int index = 0;
  double energy = 0.0;
  double kappa = 0.0;
  int wire_halfwidth = 0;
  int window_halfwidth = 0;
  Eigen::VectorXcd amplitudes;

  cdouble at(int x) const;
};

/// Bound states below the band (the occupied ones); include_upper also
/// returns those above it.
std::vector<BoundState> find_bound_states(const DisorderRealization& disorder,
                                          bool include_upper = false);

/// Quasi-bound state of the wire: a pole of the open-wire resolvent close to
/// the band, found by Newton from a closed-wire eigenstate (leads cut off).
struct Resonance {
  /// Closed-wire eigenvalue.
  double energy = 0.0;
  /// Real part of the pole in k, in (0, pi).
  double k = 0.0;
  /// |Im k| of the pole: the Lorentzian half-width in k.
  double width = 0.0;
  /// Squared amplitudes on the first and last wire site (closed-wire state,
  /// pole state for trapped resonances).
  double left_coupling = 0.0;
  double right_coupling = 0.0;
  /// Amplitudes of the pole state on the wire sites -h..h, unit norm.
  Eigen::VectorXcd state;

  cdouble at(int x) const {
    const int h = static_cast<int>(state.size() / 2);
    return (x < -h || x > h) ? cdouble(0.0) : state[x + h];
  }
  /// Fraction of the peak carried by left-incident states.
  double left_share() const {
    const double total = left_coupling + right_coupling;
    return total > 0.0 ? left_coupling / total : 0.5;
  }
};

/// Resonances narrower than this sit within a few thousand ulps of the real
/// axis in energy; k quadrature cannot resolve them, so they are integrated
/// as Lorentzians around a hole in the k grid.
inline constexpr double kTrappedWidth = 1e-10;

/// Half-width of the hole left in the k grid around a trapped resonance.
double trapped_core(const Resonance& resonance);

/// Closed-wire states in the band with width < max_width, ascending energy.
/// States are kept only for trapped resonances.
std::vector<Resonance> wire_resonances(const DisorderRealization& disorder,
                                       double max_width);

/// Occupation of a trapped state: 1 below mu_minus, the left share inside
/// the bias window, 0 above mu_plus.
double trapped_occupation(const Resonance& resonance, const ReservoirFilling& filling);

struct PeakHint;
/// Quadrature hints at +-k: graded down to width / 4 for resolvable
/// resonances, a hole of trapped_core around trapped ones.
std::vector<PeakHint> resonance_hints(const std::vector<Resonance>& resonances);

struct TransmissionCurve {
  Eigen::VectorXd k;
  Eigen::VectorXd transmittance;
  std::vector<double> peaks;

  /// Mean distance between consecutive detected peaks; 0 with fewer than two.
  double mean_peak_spacing() const;
};

/// |t_k|^2 on a uniform grid over [k_lo, k_hi] with spacing <= step;
/// step must not exceed peak_spacing / 16.
TransmissionCurve transmission_curve(const DisorderRealization& disorder,
                                     double k_lo, double k_hi, double step);

struct QuadratureSpec;

/// (1/dmu) * integral of |t_k|^2 d eps_k over [mu_minus, mu_plus].
double conductance(const DisorderRealization& disorder,
                   const ReservoirFilling& filling, const QuadratureSpec& quadrature);

enum class Regime { NearEquilibrium, MesoscopicFluctuation, FarFromEquilibrium };

const char* to_string(Regime regime);

Regime classify_regime(const ReservoirFilling& filling, const WireGeometry& geometry,
                       double ratio = 10.0);

}  // namespace ness
