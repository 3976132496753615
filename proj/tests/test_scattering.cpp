#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ness/quadrature.hpp"
#include "ness/scattering.hpp"

using namespace ness;

namespace {

constexpr double kPi = std::numbers::pi;

DisorderRealization impurity(double v, int length = 1) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(length);
  p[length / 2] = v;
  return make_disorder(WireGeometry(length, 30), p);
}

double residual(const DisorderRealization& d, const ScatteringState& s, int x) {
  return std::abs(-s.at(x + 1) - s.at(x - 1) + (d.at(x) - s.energy) * s.at(x));
}

}  // namespace

TEST_CASE("free particle") {
  const DisorderRealization d = draw_disorder(3, 0.0, WireGeometry(41));
  for (double k : {0.3, 1.7, -2.2}) {
    const ScatteringState s = solve_scattering(d, k);
    CHECK(std::abs(s.r) < 1e-14);
    CHECK(std::abs(std::abs(s.t) - 1.0) < 1e-14);
    for (int x = -60; x <= 60; x += 7) {
      CHECK(std::abs(s.at(x) - std::polar(1.0, k * x)) < 1e-12);
    }
  }
}

TEST_CASE("single impurity transmittance") {
  for (double k : {0.4, 1.1, 2.5}) {
    const double v = 2 * std::sin(k);
    const ScatteringState s = solve_scattering(impurity(v), k);
    CHECK(s.transmittance() == doctest::Approx(0.5).epsilon(1e-12));
    const double u = 0.7;
    const double exact = 4 * std::sin(k) * std::sin(k) / (4 * std::sin(k) * std::sin(k) + u * u);
    CHECK(solve_scattering(impurity(u), -k).transmittance() ==
          doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("scattering state invariants at W=0.08") {
  const DisorderRealization d = draw_disorder(5, 0.08, WireGeometry(401, 260));
  for (double k : {0.31, 0.82128, 1.5, -0.9, -2.8}) {
    const ScatteringState s = solve_scattering(d, k);
    CHECK(std::abs(s.reflectance() + s.transmittance() - 1.0) < 1e-10);
    CHECK(std::abs(s.transfer_determinant - 1.0) < 1e-8);
    double worst = 0.0;
    for (int x = -259; x <= 259; ++x) worst = std::max(worst, residual(d, s, x));
    CHECK(worst < 1e-10);
    // lead asymptotics
    const int sign = k > 0 ? 1 : -1;
    for (int x : {230, 250}) {
      const int in = -sign * x;
      const int out = sign * x;
      CHECK(std::abs(s.at(in) - std::polar(1.0, k * in) - s.r * std::polar(1.0, -k * in)) < 1e-10);
      CHECK(std::abs(s.at(out) - s.t * std::polar(1.0, k * out)) < 1e-10);
    }
    // left/right duality
    CHECK(std::abs(solve_scattering(d, -k).transmittance() - s.transmittance()) < 1e-10);
  }
  CHECK_THROWS_AS(solve_scattering(d, 0.0), DegenerateWavenumberError);
  CHECK_THROWS_AS(solve_scattering(d, kPi), DegenerateWavenumberError);
}

TEST_CASE("electron-hole symmetry") {
  const DisorderRealization d = draw_disorder(2, 0.08, WireGeometry(401));
  const DisorderRealization flipped = make_disorder(d.geometry, -d.potential);
  for (double k = 0.2; k < 3.0; k += 0.37) {
    CHECK(std::norm(lead_coefficients(d, k).t) ==
          doctest::Approx(solve_scattering(d, k).transmittance()).epsilon(1e-12));
    CHECK(std::abs(std::norm(lead_coefficients(flipped, kPi - k).t) -
                   std::norm(lead_coefficients(d, k).t)) < 1e-8);
  }
}

TEST_CASE("bound states") {
  CHECK(find_bound_states(draw_disorder(1, 0.0, WireGeometry(101))).empty());

  const auto single = find_bound_states(impurity(-1.0));
  REQUIRE(single.size() == 1);
  CHECK(single[0].energy == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-12));
  CHECK(std::cosh(single[0].kappa) * -2 == doctest::Approx(single[0].energy).epsilon(1e-12));

  const DisorderRealization d = draw_disorder(1, 0.08, WireGeometry(401, 260));
  const auto bound = find_bound_states(d);
  CHECK(!bound.empty());
  for (std::size_t i = 0; i < bound.size(); ++i) {
    const BoundState& b = bound[i];
    CHECK(b.energy < -2.0);
    double worst = 0.0, norm = 0.0;
    for (int x = -3000; x <= 3000; ++x) {
      norm += std::norm(b.at(x));
      if (std::abs(x) < 2999) {
        worst = std::max(worst, std::abs(-b.at(x + 1) - b.at(x - 1) + (d.at(x) - b.energy) * b.at(x)));
      }
    }
    CHECK(worst < 1e-10);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-8));
    // decay over the outermost window sites, all in the leads
    const int h = b.window_halfwidth;
    for (int x = h - 20; x < h; ++x) {
      CHECK(std::abs(std::abs(b.at(x + 1) / b.at(x)) - std::exp(-b.kappa)) < 1e-6);
      CHECK(std::abs(std::abs(b.at(-x - 1) / b.at(-x)) - std::exp(-b.kappa)) < 1e-6);
    }
    for (std::size_t j = 0; j < i; ++j) {
      cdouble overlap = 0.0;
      for (int x = -3000; x <= 3000; ++x) overlap += std::conj(bound[j].at(x)) * b.at(x);
      CHECK(std::abs(overlap) < 1e-8);
    }
  }
}

TEST_CASE("transmission curve and conductance") {
  const WireGeometry g(401);
  const double step = peak_spacing(g) / 32;
  const TransmissionCurve clean = transmission_curve(draw_disorder(1, 0.0, g), 0.55, 1.16, step);
  CHECK(clean.peaks.empty());
  CHECK((clean.transmittance.array() - 1.0).abs().maxCoeff() < 1e-12);

  const DisorderRealization d = draw_disorder(1, 0.08, g);
  const TransmissionCurve curve = transmission_curve(d, 0.55, 1.16, step);
  CHECK(curve.transmittance.maxCoeff() <= 1.0 + 1e-10);
  CHECK(curve.transmittance.minCoeff() >= 0.0);
  const double spacing = curve.mean_peak_spacing();
  CHECK(spacing > peak_spacing(g) / 2);
  CHECK(spacing < peak_spacing(g) * 2);

  const TransmissionCurve finer = transmission_curve(d, 0.55, 1.16, step / 2);
  REQUIRE(finer.peaks.size() >= curve.peaks.size());
  for (double p : curve.peaks) {
    double nearest = 1.0;
    for (double q : finer.peaks) nearest = std::min(nearest, std::abs(p - q));
    CHECK(nearest <= step);
  }

  const QuadratureSpec quad = QuadratureSpec::for_geometry(g);
  const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, 0.9);
  CHECK(conductance(draw_disorder(1, 0.0, g), f, quad) == doctest::Approx(1.0).epsilon(1e-9));
  const double G = conductance(d, f, quad);
  CHECK(G > 0.0);
  CHECK(G < 1.0);
  CHECK(conductance(impurity(1e4), f, quad) < 1e-6);
}

TEST_CASE("regime classification") {
  const WireGeometry g(401);
  CHECK(classify_regime(ReservoirFilling::equilibrium(-1.0), g) == Regime::NearEquilibrium);
  auto with_dkf = [](double dkf) {
    const double kf = 1.0;
    return ReservoirFilling(dispersion(kf + dkf / 2), dispersion(kf - dkf / 2));
  };
  CHECK(classify_regime(with_dkf(0.3), g) == Regime::FarFromEquilibrium);
  CHECK(classify_regime(with_dkf(0.0157), g) == Regime::MesoscopicFluctuation);
}

TEST_CASE("wire resonances") {
  const DisorderRealization d = draw_disorder(1, 0.08, WireGeometry(401));
  const auto res = wire_resonances(d, QuadratureSpec::for_geometry(d.geometry).panel_width());
  REQUIRE(!res.empty());
  for (const Resonance& r : res) {
    CHECK(r.k > 0.0);
    CHECK(r.k < kPi);
    CHECK(r.width >= 0.0);
    CHECK(r.left_share() >= 0.0);
    CHECK(r.left_share() <= 1.0);
    if (r.width < kTrappedWidth) CHECK(r.state.norm() == doctest::Approx(1.0).epsilon(1e-10));
  }
}
