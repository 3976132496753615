#include "ness/lattice.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace ness {

WireGeometry::WireGeometry(int wire_length, int window_halfwidth)
    : wire_length_(wire_length), window_halfwidth_(window_halfwidth) {
  if (wire_length < 1 || wire_length % 2 == 0) {
    throw ParameterError("wire length must be a positive odd integer");
  }
  if (window_halfwidth < wire_halfwidth()) {
    throw ParameterError("window must cover the wire");
  }
}

double SplitMix64::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phase = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phase);
  has_spare_ = true;
  return r * std::cos(phase);
}

DisorderRealization draw_disorder(std::uint64_t seed, double strength,
                                  const WireGeometry& geometry) {
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw ParameterError("disorder strength must be finite and >= 0");
  }
  DisorderRealization d{geometry, strength, seed,
                        Eigen::VectorXd::Zero(geometry.wire_length())};
  if (strength == 0.0) return d;
  SplitMix64 rng(seed);
  for (Eigen::Index i = 0; i < d.potential.size(); ++i) {
    d.potential[i] = strength * rng.gaussian();
  }
  return d;
}

DisorderRealization make_disorder(const WireGeometry& geometry,
                                  Eigen::VectorXd potential) {
  if (potential.size() != geometry.wire_length()) {
    throw ParameterError("potential length differs from wire length");
  }
  if (!potential.allFinite()) throw ParameterError("potential is not finite");
  return DisorderRealization{geometry, 0.0, 0, std::move(potential)};
}

ReservoirFilling::ReservoirFilling(double mu_plus, double mu_minus)
    : mu_plus_(mu_plus), mu_minus_(mu_minus) {
  if (!(mu_minus <= mu_plus)) {
    throw ParameterError("filling requires mu_minus <= mu_plus");
  }
  kf_plus_ = fermi_wavenumber(mu_plus);
  kf_minus_ = fermi_wavenumber(mu_minus);
}

}  // namespace ness
