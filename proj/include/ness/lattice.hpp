#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

#include "ness/errors.hpp"

namespace ness {

/// Tight-binding band energy, -2 cos k.
template <typename Scalar>
Scalar dispersion(Scalar k) {
  using std::cos;
  return Scalar(-2) * cos(k);
}

/// Inverse of dispersion on (0, pi). Throws DomainError outside the band.
template <typename Scalar>
Scalar fermi_wavenumber(Scalar mu) {
  using std::abs;
  using std::acos;
  if (!(abs(mu) < Scalar(2))) {
    throw DomainError("chemical potential outside the open band (-2, 2)");
  }
  return acos(-mu / Scalar(2));
}

/// Number of sites of the centered block A(L) = {x : |x| <= L/2}.
inline int subsystem_sites(int L) { return 2 * (L / 2) + 1; }

/// The disordered wire occupies |x| <= (wire_length - 1) / 2; amplitudes are
/// materialized on |x| <= window_halfwidth.
class WireGeometry {
 public:
  WireGeometry(int wire_length, int window_halfwidth);
  explicit WireGeometry(int wire_length)
      : WireGeometry(wire_length, (wire_length - 1) / 2) {}

  int wire_length() const { return wire_length_; }
  int wire_halfwidth() const { return (wire_length_ - 1) / 2; }
  int window_halfwidth() const { return window_halfwidth_; }
  int window_sites() const { return 2 * window_halfwidth_ + 1; }

  WireGeometry with_window(int window_halfwidth) const {
    return WireGeometry(wire_length_, window_halfwidth);
  }

  bool operator==(const WireGeometry&) const = default;

 private:
  int wire_length_;
  int window_halfwidth_;
};

/// A priori spacing of resonant-tunneling peaks, 2 pi / L_C.
inline double peak_spacing(const WireGeometry& geometry) {
  return 2.0 * std::numbers::pi / geometry.wire_length();
}

/// splitmix64 stream. Uniforms are ((z >> 11) + 1) * 2^-53 in (0, 1];
/// Gaussians come in Box-Muller pairs (r cos 2 pi u2, r sin 2 pi u2) with
/// r = sqrt(-2 ln u1), consumed in order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  double gaussian();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Gaussian on-site potential v_x of the wire, entry i belongs to site
/// x = i - wire_halfwidth.
struct DisorderRealization {
  WireGeometry geometry;
  double strength = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd potential;

  /// v_x, zero outside the wire.
  double at(int x) const {
    const int h = geometry.wire_halfwidth();
    return (x < -h || x > h) ? 0.0 : potential[x + h];
  }
  double max_abs() const {
    return potential.size() ? potential.cwiseAbs().maxCoeff() : 0.0;
  }
};

DisorderRealization draw_disorder(std::uint64_t seed, double strength,
                                  const WireGeometry& geometry);

/// Wire with an explicitly given potential (impurity models, tests).
DisorderRealization make_disorder(const WireGeometry& geometry,
                                  Eigen::VectorXd potential);

/// Chemical potentials of the left (mu_plus) and right (mu_minus) reservoirs.
class ReservoirFilling {
 public:
  ReservoirFilling(double mu_plus, double mu_minus);
  static ReservoirFilling from_bias(double mu_bar, double delta_mu) {
    return ReservoirFilling(mu_bar + delta_mu / 2, mu_bar - delta_mu / 2);
  }
  static ReservoirFilling equilibrium(double mu) { return {mu, mu}; }

  double mu_plus() const { return mu_plus_; }
  double mu_minus() const { return mu_minus_; }
  double mu_bar() const { return 0.5 * (mu_plus_ + mu_minus_); }
  double delta_mu() const { return mu_plus_ - mu_minus_; }
  double k_fermi_plus() const { return kf_plus_; }
  double k_fermi_minus() const { return kf_minus_; }
  double delta_kf() const { return kf_plus_ - kf_minus_; }

 private:
  double mu_plus_;
  double mu_minus_;
  double kf_plus_;
  double kf_minus_;
};

}  // namespace ness
