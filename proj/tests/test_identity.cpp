#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ness/correlation.hpp"
#include "ness/entanglement.hpp"
#include "ness/identity.hpp"

using namespace ness;

namespace {

constexpr double kPi = std::numbers::pi;

double clean_R(double q, int L) {
  const int sites = subsystem_sites(L);
  const double s = std::sin(q * sites / 2) / (2 * kPi * std::sin(q / 2));
  return s * s;
}

}  // namespace

TEST_CASE("occupation region") {
  const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, 0.6);
  const OccupationRegion omega(f);
  const double a = f.k_fermi_minus(), b = f.k_fermi_plus();
  CHECK(omega.area() == doctest::Approx((a + b) * (2 * kPi - a - b)));
  CHECK(omega.contains(0.1, b + 0.1));
  CHECK(!omega.contains(0.1, 0.2));
  CHECK(!omega.contains(b + 0.1, -a - 0.1));

  // area by midpoint counting
  const int n = 1000;
  const double h = 2 * kPi / n;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) count += omega.contains(-kPi + (i + 0.5) * h, -kPi + (j + 0.5) * h);
  }
  CHECK(count * h * h == doctest::Approx(omega.area()).epsilon(2e-3));

  // sheared p-ridge: density |p - dkF| along k1 + k2 = p
  for (double p : {0.0, 0.05, 0.1, 0.2, -0.1}) {
    CHECK(std::abs(omega.line_measure(OccupationRegion::Axis::P, p) - std::abs(p - f.delta_kf())) <
          1e-4);
  }
  const OccupationRegion eq(ReservoirFilling::equilibrium(-1.25));
  CHECK(eq.line_measure(OccupationRegion::Axis::P, 0.1) ==
        doctest::Approx(eq.line_measure(OccupationRegion::Axis::P, -0.1)).epsilon(1e-4));
}

TEST_CASE("current matrix elements") {
  const DisorderRealization clean = draw_disorder(1, 0.0, WireGeometry(41, 60));
  const double k = 0.7;
  const ScatteringState s = solve_scattering(clean, k);
  for (int x = -50; x <= 50; x += 10) {
    CHECK(std::abs(current_matrix_element(s, s, x) - 2 * std::sin(k)) < 1e-12);
  }
  const ScatteringState s2 = solve_scattering(clean, -1.9);
  const cdouble i(0.0, 1.0);
  for (int x = -30; x <= 30; x += 6) {
    const cdouble expected = std::exp(i * (-1.9 - k) * double(x)) *
                             i * (std::exp(-i * k) - std::exp(i * -1.9));
    CHECK(std::abs(current_matrix_element(s, s2, x) - expected) < 1e-12);
  }

  const DisorderRealization d = draw_disorder(2, 0.08, WireGeometry(401, 260));
  const ScatteringState t = solve_scattering(d, 1.3);
  const cdouble j0 = current_matrix_element(t, t, -250);
  for (int x = -250; x <= 250; x += 25) CHECK(std::abs(current_matrix_element(t, t, x) - j0) < 1e-10);
}

TEST_CASE("R through the current equals the overlap form") {
  const DisorderRealization d = draw_disorder(3, 0.08, WireGeometry(401));
  CHECK(16 * std::pow(std::sin(0.4) * std::sin(0.1), 2) ==
        doctest::Approx(std::pow(2 * std::cos(0.3) - 2 * std::cos(0.5), 2)).epsilon(1e-12));
  const ScatteringState a = solve_scattering(d, 0.9);
  const ScatteringState b = solve_scattering(d, 0.7);
  for (int L : {25, 101, 301}) {
    CHECK(R_value(a, b, L) == doctest::Approx(overlap_form(a, b, L)).epsilon(1e-8));
  }
  for (double k1 = -2.9; k1 < 3.0; k1 += 0.61) {
    for (double k2 = -2.7; k2 < 3.0; k2 += 0.53) {
      const ScatteringState s1 = solve_scattering(d, k1);
      const ScatteringState s2 = solve_scattering(d, k2);
      const double r = R_value(s1, s2, 101);
      CHECK(r >= 0.0);
      CHECK(r == doctest::Approx(overlap_form(s1, s2, 101)).epsilon(1e-8));
    }
  }
  // removable lines
  CHECK(std::isfinite(R_value(a, a, 101)));
  CHECK(R_value(a, a, 101) == doctest::Approx(overlap_form(a, a, 101)));
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    const ScatteringState c = solve_scattering(d, -0.9 + eps);
    CHECK(R_value(a, c, 101) == doctest::Approx(overlap_form(a, c, 101)).epsilon(1e-6));
  }
}

TEST_CASE("clean R on the ridges") {
  const DisorderRealization clean = draw_disorder(1, 0.0, WireGeometry(401));
  const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, 0.6);
  for (int L : {50, 100, 200}) {
    const double q = 2 * kPi / L;
    const RidgeProfile qr = ridge_profile(clean, f, L, RidgeAxis::Q, {q});
    CHECK(qr.values[0] == doctest::Approx(clean_R(q, L)).epsilon(1e-8));
    // along the p-ridge the clean overlap depends on q = 2 k1 - p only
    const double p = 2 * kPi / L;
    const RidgeProfile pr = ridge_profile(clean, f, L, RidgeAxis::P, {p});
    double mean = 0.0;
    for (int i = 0; i < pr.samples; ++i) {
      const double k1 = pr.window_lo + (pr.window_hi - pr.window_lo) * (i + 0.5) / pr.samples;
      mean += clean_R(2 * k1 - p, L) / pr.samples;
    }
    CHECK(pr.values[0] == doctest::Approx(mean).epsilon(1e-8));
    CHECK(pr.values[0] < 1.0);
  }
  CHECK(ridge_profile(clean, f, 200, RidgeAxis::Q, {ridge_offset(200)}).values[0] >
        3 * ridge_profile(clean, f, 100, RidgeAxis::Q, {ridge_offset(100)}).values[0]);
  CHECK_THROWS_AS(ridge_profile(clean, ReservoirFilling::equilibrium(-1.25), 50, RidgeAxis::P, {0.1}),
                  UsageError);
}

TEST_CASE("identity closes against the correlation trace") {
  const WireGeometry g(101);
  const QuadratureSpec q = QuadratureSpec::for_geometry(g);

  SUBCASE("clean wire") {
    const DisorderRealization d = draw_disorder(1, 0.0, g);
    for (double dm : {0.0, 0.6}) {
      const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, dm);
      const CorrelationMatrix c = build_correlation(d, f, q, 25);
      const double trace = entanglement_report(c, 51).number_variance;
      const IdentityResult id = integrate_identity(d, f, 51, q);
      CHECK(id.bound_pairs == 0.0);
      CHECK(std::abs(id.value - trace) < 1e-3 * trace);
    }
  }

  SUBCASE("disordered wire") {
    const DisorderRealization d = draw_disorder(1, 0.08, g);
    const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, 0.6);
    const CorrelationMatrix c = build_correlation(d, f, q, 25);
    const double trace = entanglement_report(c, 51).number_variance;
    const IdentityResult id = integrate_identity(d, f, 51, q);
    CHECK(id.bound_pairs > 0.0);
    CHECK(std::abs(id.value + id.bound_pairs - trace) < 1e-4 * trace);
    // the scattering-only integral misses exactly the bound-state pairs
    CHECK(id.value < trace);
  }
}

TEST_CASE("ridge saturation report") {
  const std::vector<int> L{201, 401, 801, 1601};
  const SaturationReport r =
      saturation_from_ridges(401, L, {1.0, 4.0, 4.1, 4.15}, {1.0, 4.0, 16.0, 64.0});
  REQUIRE(r.p_exponent_beyond_wire);
  CHECK(*r.p_exponent_beyond_wire < 0.3);
  CHECK(*r.q_exponent_beyond_wire ==
        doctest::Approx(std::min(growth_exponent(4.0, 401, 16.0, 801), growth_exponent(16.0, 801, 64.0, 1601))));
  CHECK(r.p_exponents[0] == doctest::Approx(std::log(4.0) / std::log(401.0 / 201.0)));
  CHECK(r.saturates);
  CHECK(!saturation_from_ridges(401, L, {1.0, 4.0, 16.0, 64.0}, {1.0, 4.0, 16.0, 64.0}).saturates);

  const DisorderRealization clean = draw_disorder(1, 0.0, WireGeometry(401));
  const SaturationReport flat = reservoir_saturation_check(
      clean, ReservoirFilling::from_bias(-1.25, 0.6), {201, 401, 801});
  REQUIRE(flat.p_exponent_beyond_wire);
  CHECK(std::abs(*flat.p_exponent_beyond_wire) < 0.3);
  for (double v : flat.p_ridge) CHECK(v < 1.0);

  // at a fixed small p, R stops growing once A covers the wire
  const DisorderRealization d = draw_disorder(1, 0.08, WireGeometry(401));
  const SaturationReport rough = reservoir_saturation_check(
      d, ReservoirFilling::from_bias(-1.25, 0.9), {201, 401, 801, 1201});
  CHECK(rough.p_exponents[0] > 1.0);
  CHECK(*rough.p_exponent_beyond_wire < 0.3);
  CHECK(*rough.q_exponent_beyond_wire > 1.5);
  CHECK(rough.saturates);
}
