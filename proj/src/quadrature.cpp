#include "ness/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "ness/errors.hpp"

namespace ness {

QuadratureSpec QuadratureSpec::for_geometry(const WireGeometry& geometry) {
  QuadratureSpec spec;
  spec.panels_per_unit_k =
      static_cast<int>(std::ceil(8.0 / peak_spacing(geometry) - 1e-9));
  return spec;
}

void QuadratureSpec::validate(const WireGeometry& geometry) const {
  if (nodes_per_panel < 1 || panels_per_unit_k < 1) {
    throw ParameterError("quadrature needs at least one panel and one node");
  }
  if (panel_width() > peak_spacing(geometry) / 8.0 * (1.0 + 1e-9)) {
    throw ParameterError("quadrature panels wider than peak_spacing / 8");
  }
  if (!(tolerance > 0.0)) throw ParameterError("quadrature tolerance must be > 0");
  if (max_refinements < 1) throw ParameterError("max_refinements must be >= 1");
}

void KGrid::append(const KGrid& other) {
  const int offset = panel_count();
  nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  for (int p : other.panel) panel.push_back(p + offset);
}

KGrid composite_grid(double a, double b, const QuadratureSpec& spec, int level,
                     const std::vector<PeakHint>& hints) {
  KGrid grid;
  if (!(b > a)) return grid;
  const auto rule = gauss_legendre<double>(spec.nodes_per_panel);
  const long base = std::max(1L, static_cast<long>(std::ceil(
                                     (b - a) * spec.panels_per_unit_k - 1e-9)));
  const double base_width = (b - a) / static_cast<double>(base);

  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(base) + 1);
  for (long p = 0; p <= base; ++p) edges.push_back(a + base_width * static_cast<double>(p));
  edges.back() = b;
  for (const PeakHint& h : hints) {
    if (!(h.radius > 0.0) || h.center + base_width <= a || h.center - base_width >= b) continue;
    if (!h.hole && h.center > a && h.center < b) edges.push_back(h.center);
    for (double d = h.radius; d < base_width; d *= 4.0) {
      if (h.center - d > a && h.center - d < b) edges.push_back(h.center - d);
      if (h.center + d > a && h.center + d < b) edges.push_back(h.center + d);
    }
  }
  std::sort(edges.begin(), edges.end());
  const double eps = 1e-15 * std::max(std::abs(a), std::abs(b)) + 1e-300;
  std::vector<double> merged{edges.front()};
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] - merged.back() > eps) merged.push_back(edges[i]);
  }
  merged.back() = b;

  const auto in_hole = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    for (const PeakHint& h : hints) {
      if (h.hole && std::abs(mid - h.center) < h.radius) return true;
    }
    return false;
  };
  const long split = 1L << level;
  const std::size_t total = (merged.size() - 1) * static_cast<std::size_t>(split) *
                            rule.nodes.size();
  grid.nodes.reserve(total);
  grid.weights.reserve(total);
  grid.panel.reserve(total);
  int panel = 0;
  for (std::size_t e = 0; e + 1 < merged.size(); ++e) {
    if (in_hole(merged[e], merged[e + 1])) continue;
    const double width = (merged[e + 1] - merged[e]) / static_cast<double>(split);
    for (long p = 0; p < split; ++p, ++panel) {
      const double mid = merged[e] + width * (static_cast<double>(p) + 0.5);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        grid.nodes.push_back(mid + 0.5 * width * rule.nodes[j]);
        grid.weights.push_back(0.5 * width * rule.weights[j]);
        grid.panel.push_back(panel);
      }
    }
  }
  return grid;
}

}  // namespace ness
