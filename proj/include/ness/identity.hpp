#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ness/lattice.hpp"
#include "ness/quadrature.hpp"
#include "ness/scattering.hpp"

namespace ness {

/// Omega: k1 occupied (in [-kF-, kF+]) and k2 empty, k2 in (-pi, pi].
class OccupationRegion {
 public:
  explicit OccupationRegion(const ReservoirFilling& filling)
      : kf_plus_(filling.k_fermi_plus()), kf_minus_(filling.k_fermi_minus()) {}

  bool occupied(double k) const { return k >= -kf_minus_ && k <= kf_plus_; }
  bool contains(double k1, double k2) const { return occupied(k1) && !occupied(k2); }
  /// (kF+ + kF-)(2 pi - kF+ - kF-)
  double area() const {
    const double width = kf_plus_ + kf_minus_;
    return width * (2.0 * std::numbers::pi - width);
  }

  enum class Axis { P, Q };
  /// k1-length of Omega along the line k1 + k2 = p (Axis::P) or
  /// k1 - k2 = q (Axis::Q), counted on `samples` midpoints of (-pi, pi].
  double line_measure(Axis axis, double offset, int samples = 200000) const;

 private:
  double kf_plus_;
  double kf_minus_;
};

/// J_{k1 k2}(x + 1/2) = i [conj(phi1(x+1)) phi2(x) - conj(phi1(x)) phi2(x+1)].
template <typename State1, typename State2>
cdouble current_matrix_element(const State1& s1, const State2& s2, int x) {
  return cdouble(0.0, 1.0) *
         (std::conj(s1.at(x + 1)) * s2.at(x) - std::conj(s1.at(x)) * s2.at(x + 1));
}

/// |sum over A(L) of conj(phi1) phi2|^2 / (2 pi)^2.
template <typename State1, typename State2>
double overlap_form(const State1& s1, const State2& s2, int L) {
  const int m = L / 2;
  cdouble sum = 0.0;
  for (int x = -m; x <= m; ++x) sum += std::conj(s1.at(x)) * s2.at(x);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::norm(sum) / (two_pi * two_pi);
}

/// Below this |sin(p/2) sin(q/2)| R is evaluated through overlap_form.
inline constexpr double kRemovableLine = 1e-6;

/// R = |J(L/2) - J(-L/2)|^2 / [16 sin^2(p/2) sin^2(q/2)] / (2 pi)^2 with the
/// edge bonds of A(L); the (2 pi)^-2 belongs to the unit-incident measure.
double R_value(const ScatteringState& s1, const ScatteringState& s2, int L);

struct IdentityResult {
  /// Scattering states only.
  double value = 0.0;
  /// Pairs with a bound state (filled below the band, empty above), left out
  /// of value. value + bound_pairs is Tr C_A(1 - C_A) with the bound states filled.
  double bound_pairs = 0.0;
  int level = 0;
  double last_change = 0.0;
  std::size_t pairs = 0;
  std::size_t removable_pairs = 0;
};

struct IdentityOptions {
  int threads = 1;
  /// Convergence is |I_l - I_{l-1}| < relative_tolerance * max(1, |I_l|).
  double relative_tolerance = 1e-5;
};

/// Double integral of R over Omega, scattering states only.
IdentityResult integrate_identity(const DisorderRealization& disorder,
                                  const ReservoirFilling& filling, int L,
                                  const QuadratureSpec& quadrature,
                                  const IdentityOptions& options = {});

/// Same integral at one fixed quadrature level.
IdentityResult identity_at_level(const DisorderRealization& disorder,
                                 const ReservoirFilling& filling, int L,
                                 const QuadratureSpec& quadrature, int level,
                                 int threads = 1);

enum class RidgeAxis { P, Q };
const char* to_string(RidgeAxis axis);

struct RidgeProfile {
  RidgeAxis axis = RidgeAxis::P;
  int L = 0;
  std::vector<double> offsets;
  std::vector<double> values;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int samples = 0;
};

/// Averaging window k1 in [max(1.05 kF-, 0.3), 0.95 kF+].
std::pair<double, double> ridge_window(const ReservoirFilling& filling);

/// Mean of R over `samples` k1 midpoints of the window: p-ridge uses
/// k2 = p - k1, q-ridge uses k2 = k1 - q. Empty window -> UsageError.
RidgeProfile ridge_profile(const DisorderRealization& disorder,
                           const ReservoirFilling& filling, int L, RidgeAxis axis,
                           const std::vector<double>& offsets, int samples = 64);

/// Ridge offset used for size scaling: pi / |A(L)|, half the first zero of
/// the clean forward-scattering kernel.
inline double ridge_offset(int L) {
  return std::numbers::pi / subsystem_sites(L);
}

/// The p-ridge offset stops shrinking at the wire: past L_C the small-|p|
/// part of R is compared at a fixed p, where its growth with L ends.
inline double p_ridge_offset(int L, int wire_length) {
  return ridge_offset(std::min(L, wire_length));
}

/// ln(r2 / r1) / ln(L2 / L1).
inline double growth_exponent(double r1, int L1, double r2, int L2) {
  return std::log(r2 / r1) / std::log(static_cast<double>(L2) / L1);
}

struct SaturationReport {
  int wire_length = 0;
  std::vector<int> lengths;
  std::vector<double> p_ridge;
  std::vector<double> q_ridge;
  /// Exponents between consecutive lengths.
  std::vector<double> p_exponents;
  std::vector<double> q_exponents;
  /// Largest p exponent / smallest q exponent over pairs with L1 >= L_C.
  std::optional<double> p_exponent_beyond_wire;
  std::optional<double> q_exponent_beyond_wire;
  /// p exponent < 0.3 and q exponent > 1.5 beyond the wire.
  bool saturates = false;
};

SaturationReport saturation_from_ridges(int wire_length, std::vector<int> lengths,
                                        std::vector<double> p_ridge,
                                        std::vector<double> q_ridge);

SaturationReport reservoir_saturation_check(const DisorderRealization& disorder,
                                            const ReservoirFilling& filling,
                                            const std::vector<int>& lengths);

/// R on a (k1, k2) grid, rows k1, columns k2; NaN where a wavenumber is degenerate.
Eigen::MatrixXd r_map(const DisorderRealization& disorder, int L,
                      const Eigen::VectorXd& k1, const Eigen::VectorXd& k2);

}  // namespace ness
