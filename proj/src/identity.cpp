#include "ness/identity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ness/errors.hpp"
#include "ness/parallel.hpp"

namespace ness {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double k) {
  while (k > kPi) k -= kTwoPi;
  while (k <= -kPi) k += kTwoPi;
  return k;
}

bool degenerate(double k) {
  const double a = std::abs(k);
  return a < 1e-12 || kPi - a < 1e-12;
}

}  // namespace

double OccupationRegion::line_measure(Axis axis, double offset, int samples) const {
  const double h = kTwoPi / samples;
  int count = 0;
  for (int i = 0; i < samples; ++i) {
    const double k1 = -kPi + (i + 0.5) * h;
    const double k2 = wrap(axis == Axis::P ? offset - k1 : k1 - offset);
    if (contains(k1, k2)) ++count;
  }
  return count * h;
}

double R_value(const ScatteringState& s1, const ScatteringState& s2, int L) {
  const double p = s1.k + s2.k;
  const double q = s1.k - s2.k;
  const double s = std::sin(p / 2) * std::sin(q / 2);
  if (std::abs(s) < kRemovableLine) return overlap_form(s1, s2, L);
  const int m = L / 2;
  const cdouble dj =
      current_matrix_element(s1, s2, m) - current_matrix_element(s1, s2, -m - 1);
  return std::norm(dj) / (16.0 * s * s) / (kTwoPi * kTwoPi);
}

// ---------------------------------------------------------------------------
// identity integral

namespace {

struct EdgeStates {
  std::vector<double> k;
  std::vector<double> weight;
  std::vector<double> energy;
  // A: conj of (phi(m+1), phi(m), phi(-m), phi(-m-1)); B: (phi(m), -phi(m+1),
  // -phi(-m-1), phi(-m)), so that Delta J = i A B^T.
  Eigen::MatrixXcd edges;
  // <d | P_A | phi> per node and discrete state d (trapped, then bound)
  Eigen::MatrixXcd discrete;
};

// amplitudes of a discrete state on A, sites -L/2 .. L/2
template <typename State>
Eigen::VectorXcd on_subsystem(const State& state, int L) {
  const int m = L / 2;
  Eigen::VectorXcd v(2 * m + 1);
  for (int x = -m; x <= m; ++x) v[x + m] = state.at(x);
  return v;
}

EdgeStates edge_states(const DisorderRealization& disorder, const KGrid& grid, int L,
                       bool as_row, const std::vector<Eigen::VectorXcd>& discrete,
                       int threads) {
  const int m = L / 2;
  EdgeStates e;
  e.k = grid.nodes;
  e.weight = grid.weights;
  e.energy.resize(grid.size());
  e.edges.resize(static_cast<Eigen::Index>(grid.size()), 4);
  e.discrete.resize(static_cast<Eigen::Index>(grid.size()),
                    static_cast<Eigen::Index>(discrete.size()));
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const ScatteringState s = solve_scattering(disorder, grid.nodes[i]);
    const auto r = static_cast<Eigen::Index>(i);
    e.energy[i] = s.energy;
    if (as_row) {
      e.edges(r, 0) = std::conj(s.at(m + 1));
      e.edges(r, 1) = std::conj(s.at(m));
      e.edges(r, 2) = std::conj(s.at(-m));
      e.edges(r, 3) = std::conj(s.at(-m - 1));
    } else {
      e.edges(r, 0) = s.at(m);
      e.edges(r, 1) = -s.at(m + 1);
      e.edges(r, 2) = -s.at(-m - 1);
      e.edges(r, 3) = s.at(-m);
    }
    Eigen::VectorXcd phi(2 * m + 1);
    for (int x = -m; x <= m; ++x) phi[x + m] = s.at(x);
    for (std::size_t t = 0; t < discrete.size(); ++t) {
      e.discrete(r, static_cast<Eigen::Index>(t)) = discrete[t].dot(phi);
    }
  });
  return e;
}

// Pairs with discrete states. A state with occupation f counts as occupied
// with weight f and empty with weight 1 - f; a trapped resonance stands in for
// the (2 pi)^-1 dk of its peak, a bound state has f = 1.
double discrete_pairs(const std::vector<Eigen::VectorXcd>& discrete,
                      const std::vector<double>& occupation, const EdgeStates& occupied,
                      const EdgeStates& empty, std::size_t first, std::size_t last) {
  double sum = 0.0;
  for (std::size_t t = first; t < last; ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    double with_empty = 0.0;
    for (std::size_t j = 0; j < empty.weight.size(); ++j) {
      with_empty += empty.weight[j] * std::norm(empty.discrete(static_cast<Eigen::Index>(j), c));
    }
    double with_occupied = 0.0;
    for (std::size_t i = 0; i < occupied.weight.size(); ++i) {
      with_occupied +=
          occupied.weight[i] * std::norm(occupied.discrete(static_cast<Eigen::Index>(i), c));
    }
    sum += (occupation[t] * with_empty + (1.0 - occupation[t]) * with_occupied) / kTwoPi;
  }
  // ordered pairs (t occupied, u empty) whose later member lies in [first, last)
  for (std::size_t t = 0; t < last; ++t) {
    for (std::size_t u = 0; u < last; ++u) {
      if (std::max(t, u) < first) continue;
      sum += occupation[t] * (1.0 - occupation[u]) * std::norm(discrete[t].dot(discrete[u]));
    }
  }
  return sum;
}

}  // namespace

IdentityResult identity_at_level(const DisorderRealization& disorder,
                                 const ReservoirFilling& filling, int L,
                                 const QuadratureSpec& quadrature, int level,
                                 int threads) {
  const std::vector<Resonance> resonances =
      wire_resonances(disorder, quadrature.panel_width());
  const std::vector<PeakHint> hints = resonance_hints(resonances);
  std::vector<Eigen::VectorXcd> discrete;
  std::vector<double> occupation;
  for (const Resonance& r : resonances) {
    if (r.width >= kTrappedWidth) continue;
    discrete.push_back(on_subsystem(r, L));
    occupation.push_back(trapped_occupation(r, filling));
  }
  const std::size_t trapped = discrete.size();
  for (const BoundState& b : find_bound_states(disorder, true)) {
    discrete.push_back(on_subsystem(b, L));
    occupation.push_back(b.energy < 0.0 ? 1.0 : 0.0);
  }

  KGrid occupied = composite_grid(-filling.k_fermi_minus(), 0.0, quadrature, level, hints);
  occupied.append(composite_grid(0.0, filling.k_fermi_plus(), quadrature, level, hints));
  KGrid empty = composite_grid(-kPi, -filling.k_fermi_minus(), quadrature, level, hints);
  empty.append(composite_grid(filling.k_fermi_plus(), kPi, quadrature, level, hints));

  const EdgeStates a = edge_states(disorder, occupied, L, true, discrete, threads);
  const EdgeStates b = edge_states(disorder, empty, L, false, discrete, threads);
  const Eigen::MatrixXcd bt = b.edges.transpose();

  constexpr Eigen::Index kRows = 256;
  const Eigen::Index n1 = a.edges.rows();
  const Eigen::Index n2 = b.edges.rows();
  const std::size_t chunks = static_cast<std::size_t>((n1 + kRows - 1) / kRows);
  std::vector<double> partial(chunks, 0.0);
  std::vector<std::size_t> removable(chunks, 0);

  // threshold on |eps1 - eps2| = 4 |sin(p/2) sin(q/2)|
  const double energy_gap = 4.0 * kRemovableLine;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * kRows;
    const Eigen::Index rows = std::min(kRows, n1 - lo);
    const Eigen::MatrixXcd dj = a.edges.middleRows(lo, rows) * bt;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto ii = static_cast<std::size_t>(lo + i);
      double row = 0.0;
      for (Eigen::Index j = 0; j < n2; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double gap = a.energy[ii] - b.energy[jj];
        double r;
        if (std::abs(gap) < energy_gap) {
          const ScatteringState s1 = solve_scattering(disorder, a.k[ii]);
          const ScatteringState s2 = solve_scattering(disorder, b.k[jj]);
          r = overlap_form(s1, s2, L);
          ++removable[c];
        } else {
          r = std::norm(dj(i, j)) / (gap * gap * kTwoPi * kTwoPi);
        }
        row += b.weight[jj] * r;
      }
      sum += a.weight[ii] * row;
    }
    partial[c] = sum;
  });

  IdentityResult out;
  out.level = level;
  for (std::size_t c = 0; c < chunks; ++c) {
    out.value += partial[c];
    out.removable_pairs += removable[c];
  }
  out.value += discrete_pairs(discrete, occupation, a, b, 0, trapped);
  out.bound_pairs = discrete_pairs(discrete, occupation, a, b, trapped, discrete.size());
  out.pairs = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
  return out;
}

IdentityResult integrate_identity(const DisorderRealization& disorder,
                                  const ReservoirFilling& filling, int L,
                                  const QuadratureSpec& quadrature,
                                  const IdentityOptions& options) {
  if (L < 0) throw UsageError("negative subsystem length");
  quadrature.validate(disorder.geometry);
  IdentityResult previous =
      identity_at_level(disorder, filling, L, quadrature, 0, options.threads);
  for (int level = 1; level <= quadrature.max_refinements; ++level) {
    IdentityResult current =
        identity_at_level(disorder, filling, L, quadrature, level, options.threads);
    current.last_change = std::abs(current.value - previous.value);
    if (current.last_change <
        options.relative_tolerance * std::max(1.0, std::abs(current.value))) {
      return current;
    }
    previous = current;
  }
  throw QuadratureError("identity double integral did not converge (last change " +
                        std::to_string(previous.last_change) + ")");
}

// ---------------------------------------------------------------------------
// ridges

const char* to_string(RidgeAxis axis) { return axis == RidgeAxis::P ? "p" : "q"; }

std::pair<double, double> ridge_window(const ReservoirFilling& filling) {
  return {std::max(1.05 * filling.k_fermi_minus(), 0.3), 0.95 * filling.k_fermi_plus()};
}

RidgeProfile ridge_profile(const DisorderRealization& disorder,
                           const ReservoirFilling& filling, int L, RidgeAxis axis,
                           const std::vector<double>& offsets, int samples) {
  const auto [lo, hi] = ridge_window(filling);
  if (!(hi > lo)) throw UsageError("ridge averaging window is empty");
  if (samples < 1) throw UsageError("ridge averaging needs at least one sample");
  RidgeProfile profile;
  profile.axis = axis;
  profile.L = L;
  profile.offsets = offsets;
  profile.window_lo = lo;
  profile.window_hi = hi;
  profile.samples = samples;

  std::vector<ScatteringState> first;
  first.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    first.push_back(solve_scattering(disorder, lo + (hi - lo) * (i + 0.5) / samples));
  }
  for (double offset : offsets) {
    double sum = 0.0;
    for (const ScatteringState& s1 : first) {
      const double k2 = axis == RidgeAxis::P ? offset - s1.k : s1.k - offset;
      if (degenerate(k2) || std::abs(k2) > kPi) {
        throw UsageError("ridge offset moves k2 outside the band");
      }
      sum += R_value(s1, solve_scattering(disorder, k2), L);
    }
    profile.values.push_back(sum / samples);
  }
  return profile;
}

SaturationReport saturation_from_ridges(int wire_length, std::vector<int> lengths,
                                        std::vector<double> p_ridge,
                                        std::vector<double> q_ridge) {
  SaturationReport report;
  report.wire_length = wire_length;
  report.lengths = std::move(lengths);
  report.p_ridge = std::move(p_ridge);
  report.q_ridge = std::move(q_ridge);
  for (std::size_t i = 0; i + 1 < report.lengths.size(); ++i) {
    const int l1 = report.lengths[i];
    const int l2 = report.lengths[i + 1];
    const double sp = growth_exponent(report.p_ridge[i], l1, report.p_ridge[i + 1], l2);
    const double sq = growth_exponent(report.q_ridge[i], l1, report.q_ridge[i + 1], l2);
    report.p_exponents.push_back(sp);
    report.q_exponents.push_back(sq);
    if (l1 >= wire_length) {
      report.p_exponent_beyond_wire =
          std::max(report.p_exponent_beyond_wire.value_or(-1e300), sp);
      report.q_exponent_beyond_wire =
          std::min(report.q_exponent_beyond_wire.value_or(1e300), sq);
    }
  }
  report.saturates = report.p_exponent_beyond_wire && report.q_exponent_beyond_wire &&
                     *report.p_exponent_beyond_wire < 0.3 &&
                     *report.q_exponent_beyond_wire > 1.5;
  return report;
}

SaturationReport reservoir_saturation_check(const DisorderRealization& disorder,
                                            const ReservoirFilling& filling,
                                            const std::vector<int>& lengths) {
  std::vector<int> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> p, q;
  for (int L : sorted) {
    const double p_offset = p_ridge_offset(L, disorder.geometry.wire_length());
    p.push_back(ridge_profile(disorder, filling, L, RidgeAxis::P, {p_offset}).values[0]);
    q.push_back(ridge_profile(disorder, filling, L, RidgeAxis::Q, {ridge_offset(L)}).values[0]);
  }
  return saturation_from_ridges(disorder.geometry.wire_length(), std::move(sorted),
                                std::move(p), std::move(q));
}

Eigen::MatrixXd r_map(const DisorderRealization& disorder, int L,
                      const Eigen::VectorXd& k1, const Eigen::VectorXd& k2) {
  Eigen::MatrixXd out(k1.size(), k2.size());
  std::vector<std::optional<ScatteringState>> second;
  for (Eigen::Index j = 0; j < k2.size(); ++j) {
    second.push_back(degenerate(k2[j]) ? std::nullopt
                                       : std::optional(solve_scattering(disorder, k2[j])));
  }
  for (Eigen::Index i = 0; i < k1.size(); ++i) {
    if (degenerate(k1[i])) {
      out.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const ScatteringState s1 = solve_scattering(disorder, k1[i]);
    for (Eigen::Index j = 0; j < k2.size(); ++j) {
      out(i, j) = second[static_cast<std::size_t>(j)]
                      ? R_value(s1, *second[static_cast<std::size_t>(j)], L)
                      : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace ness
