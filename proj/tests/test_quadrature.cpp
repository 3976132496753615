#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ness/quadrature.hpp"

using namespace ness;

namespace {

double integrate(const KGrid& g, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * f(g.nodes[i]);
  return s;
}

}  // namespace

TEST_CASE("gauss-legendre rule is exact to degree 2n-1") {
  for (int n : {1, 2, 5, 8, 16}) {
    const auto rule = gauss_legendre<double>(n);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
      const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
      CHECK(std::abs(s - exact) < 1e-13);
    }
    for (int i = 1; i < n; ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
  }
  // long double instantiation
  const auto rule = gauss_legendre<long double>(4);
  CHECK(static_cast<double>(rule.weights[0] + rule.weights[1]) == doctest::Approx(1.0));
}

TEST_CASE("composite grid") {
  QuadratureSpec spec;
  spec.panels_per_unit_k = 10;
  const KGrid g = composite_grid(0.0, 1.0, spec, 0);
  CHECK(g.size() == 80);
  CHECK(g.panel_count() == 10);
  CHECK(integrate(g, [](double k) { return std::cos(k); }) ==
        doctest::Approx(std::sin(1.0)).epsilon(1e-14));
  for (double k : g.nodes) {
    CHECK(k > 0.0);
    CHECK(k < 1.0);
  }
  const KGrid fine = composite_grid(0.0, 1.0, spec, 2);
  CHECK(fine.panel_count() == 40);

  SUBCASE("hints refine around a narrow peak") {
    const double c = 0.4321, w = 1e-5;
    auto lorentz = [](double k) { return 1e-5 / ((k - 0.4321) * (k - 0.4321) + 1e-10); };
    const double exact = std::atan((1.0 - c) / w) + std::atan(c / w);
    const KGrid plain = composite_grid(0.0, 1.0, spec, 0);
    const KGrid hinted = composite_grid(0.0, 1.0, spec, 0, {{c, w / 4, false}});
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < plain.size(); ++i) a += plain.weights[i] * lorentz(plain.nodes[i]);
    for (std::size_t i = 0; i < hinted.size(); ++i) b += hinted.weights[i] * lorentz(hinted.nodes[i]);
    CHECK(std::abs(b - exact) < 1e-6 * exact);
    CHECK(std::abs(a - exact) > 100 * std::abs(b - exact));
  }

  SUBCASE("a hole has no nodes") {
    const KGrid holed = composite_grid(0.0, 1.0, spec, 1, {{0.5, 1e-3, true}});
    double wsum = 0.0;
    for (std::size_t i = 0; i < holed.size(); ++i) {
      CHECK(std::abs(holed.nodes[i] - 0.5) > 1e-3);
      wsum += holed.weights[i];
    }
    CHECK(wsum == doctest::Approx(1.0 - 2e-3).epsilon(1e-12));
  }
}

TEST_CASE("quadrature spec for a wire") {
  const WireGeometry g(401);
  const QuadratureSpec q = QuadratureSpec::for_geometry(g);
  CHECK(q.panel_width() <= peak_spacing(g) / 8);
  CHECK_NOTHROW(q.validate(g));
  QuadratureSpec coarse;
  coarse.panels_per_unit_k = 10;
  CHECK_THROWS_AS(coarse.validate(g), ParameterError);
}
