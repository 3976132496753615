#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ness/lattice.hpp"

namespace ness {

/// Composite Gauss-Legendre rule shared by every k integral.
struct QuadratureSpec {
  int panels_per_unit_k = 511;
  int nodes_per_panel = 8;
  /// Absolute convergence tolerance between successive panel halvings.
  double tolerance = 1e-6;
  int max_refinements = 4;

  /// Panel width peak_spacing / 8.
  static QuadratureSpec for_geometry(const WireGeometry& geometry);

  double panel_width() const { return 1.0 / panels_per_unit_k; }
  /// Throws ParameterError if panels are too wide to resolve resonances.
  void validate(const WireGeometry& geometry) const;

  bool operator==(const QuadratureSpec&) const = default;
};

template <typename Scalar>
struct GaussLegendreRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;
};

/// n-point rule on [-1, 1], nodes ascending. Newton iteration on P_n.
template <typename Scalar>
GaussLegendreRule<Scalar> gauss_legendre(int n) {
  using std::abs;
  using std::cos;
  GaussLegendreRule<Scalar> rule{std::vector<Scalar>(n), std::vector<Scalar>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    Scalar z = cos(Scalar(std::numbers::pi) * (Scalar(i) + Scalar(0.75)) /
                   (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const Scalar p3 = p2;
        p2 = p1;
        p1 = ((Scalar(2 * j - 1)) * z * p2 - Scalar(j - 1) * p3) / Scalar(j);
      }
      dp = Scalar(n) * (z * p1 - p2) / (z * z - Scalar(1));
      const Scalar step = p1 / dp;
      z -= step;
      if (abs(step) < Scalar(1e-15)) break;
    }
    // final derivative at the converged node
    Scalar p1 = 1, p2 = 0;
    for (int j = 1; j <= n; ++j) {
      const Scalar p3 = p2;
      p2 = p1;
      p1 = ((Scalar(2 * j - 1)) * z * p2 - Scalar(j - 1) * p3) / Scalar(j);
    }
    dp = Scalar(n) * (z * p1 - p2) / (z * z - Scalar(1));
    const Scalar w = Scalar(2) / ((Scalar(1) - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Nodes and weights of a composite rule; panel[i] is the index of the panel
/// node i belongs to (counted over the whole grid).
struct KGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> panel;

  std::size_t size() const { return nodes.size(); }
  int panel_count() const { return panel.empty() ? 0 : panel.back() + 1; }
  void append(const KGrid& other);
};

/// Narrow peak of the integrand at `center`; breakpoints are placed at
/// center +- radius * 4^j. With `hole` set, (center - radius, center + radius)
/// gets no nodes at all (the caller integrates the peak itself).
struct PeakHint {
  double center = 0.0;
  double radius = 0.0;
  bool hole = false;
};

/// [a, b] split into ceil((b - a) * panels_per_unit_k) equal panels, each
/// hint adding breakpoints center +- radius * 4^j out to one panel width;
/// every resulting panel is then halved `level` times.
/// Interval endpoints are never nodes.
KGrid composite_grid(double a, double b, const QuadratureSpec& spec, int level,
                     const std::vector<PeakHint>& hints = {});

}  // namespace ness
