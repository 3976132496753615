#include "ness/correlation.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <sstream>
#include <vector>

#include "ness/errors.hpp"
#include "ness/parallel.hpp"

namespace ness {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kChunk = 256;

DisorderRealization with_window(const DisorderRealization& disorder, int window) {
  DisorderRealization d = disorder;
  d.geometry = disorder.geometry.with_window(
      std::max(window, disorder.geometry.wire_halfwidth()));
  return d;
}

void hermitian_fill(Eigen::MatrixXcd& c) {
  const Eigen::Index n = c.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = cdouble(c(j, j).real(), 0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) c(j, i) = std::conj(c(i, j));
  }
}

}  // namespace

Eigen::MatrixXcd CorrelationMatrix::subsystem(int L, bool include_bound_states) const {
  const int m = L / 2;
  if (m > window_halfwidth || L < 0) {
    throw UsageError("subsystem A(L) exceeds the correlation window");
  }
  const int offset = window_halfwidth - m;
  const int n = 2 * m + 1;
  Eigen::MatrixXcd block = values.block(offset, offset, n, n);
  if (!include_bound_states && bound_states > 0) {
    block -= bound_part.block(offset, offset, n, n);
  }
  return block;
}

namespace {

struct Segment {
  double lo;
  double hi;
};

// Lorentzian model of a trapped peak in (1 / 2 pi) |phi_k(x)|^2: density per
// unit k at k, and its integral over [lo, hi]. Left-incident states (k > 0)
// carry the left share, right-incident ones (k < 0) the rest.
double lorentzian_density(const Resonance& r, double k) {
  const double share = k > 0.0 ? r.left_share() : 1.0 - r.left_share();
  const double d = std::abs(k) - r.k;
  return share * r.width / std::numbers::pi / (d * d + r.width * r.width);
}

double lorentzian_mass(const Resonance& r, const Segment& s) {
  const double share = s.lo >= 0.0 ? r.left_share() : 1.0 - r.left_share();
  const double c = s.lo >= 0.0 ? r.k : -r.k;
  return share / std::numbers::pi *
         (std::atan((s.hi - c) / r.width) - std::atan((s.lo - c) / r.width));
}

// Part of the hole integral that the Lorentzian misses. Near the pole the
// state is a v / (q - k + i w) + rho in q = |k|; a and rho come from two
// states at q = k +- kHoleProbe, and the hole contributes
// (1 / 2 pi) [a L v rho^H + h.c. + 2 r rho rho^H], L = int du / (u + i w).
constexpr double kHoleProbe = 1e-6;

Eigen::MatrixXcd hole_background(const DisorderRealization& d, const Resonance& r,
                                 const Eigen::VectorXcd& v, double side, int offset, int n) {
  const double w = r.width;
  const double p = kHoleProbe;
  const Eigen::VectorXcd above =
      solve_scattering(d, side * (r.k + p)).amplitudes.segment(offset, n);
  const Eigen::VectorXcd below =
      solve_scattering(d, side * (r.k - p)).amplitudes.segment(offset, n);
  const double scale = p * p + w * w;
  const cdouble a = v.dot(above - below) * scale / (2.0 * p);
  const Eigen::VectorXcd rho = 0.5 * (above + below) + a * cdouble(0.0, w / scale) * v;
  const double core = trapped_core(r);
  const cdouble log_ratio(0.0, 2.0 * std::atan(w / core) - std::numbers::pi);
  const Eigen::MatrixXcd cross = (a * log_ratio) * v * rho.adjoint();
  return (cross + cross.adjoint() + 2.0 * core * rho * rho.adjoint()) / kTwoPi;
}

// (1 / 2 pi) sum over the k grid of phi phi^H, each segment lying on one
// side of k = 0. Trapped resonances are cut out of the grid and added back
// as their Lorentzian, whose tails are taken off the nodes outside the hole.
// Chunks are reduced in a fixed order so the thread count does not matter.
Eigen::MatrixXcd k_integral(const DisorderRealization& disorder,
                            const std::vector<Segment>& segments,
                            const QuadratureSpec& quadrature, int window_halfwidth,
                            int level, int threads,
                            const std::vector<Resonance>& resonances) {
  const DisorderRealization d = with_window(disorder, window_halfwidth);
  const int hw = d.geometry.window_halfwidth();
  const int n = 2 * window_halfwidth + 1;
  const int offset = hw - window_halfwidth;

  const std::vector<PeakHint> hints = resonance_hints(resonances);
  KGrid grid;
  for (const Segment& s : segments) {
    grid.append(composite_grid(s.lo, s.hi, quadrature, level, hints));
  }

  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, threads));
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(n, n);
  std::vector<Eigen::MatrixXcd> partial(std::min(batch, chunks));
  for (std::size_t first = 0; first < chunks; first += batch) {
    const std::size_t count = std::min(batch, chunks - first);
    parallel_for(count, threads, [&](std::size_t slot) {
      const std::size_t chunk = first + slot;
      const std::size_t lo = chunk * kChunk;
      const std::size_t hi = std::min(grid.size(), lo + kChunk);
      Eigen::MatrixXcd phi(n, static_cast<Eigen::Index>(hi - lo));
      for (std::size_t i = lo; i < hi; ++i) {
        const ScatteringState s = solve_scattering(d, grid.nodes[i]);
        phi.col(static_cast<Eigen::Index>(i - lo)) =
            std::sqrt(grid.weights[i] / kTwoPi) * s.amplitudes.segment(offset, n);
      }
      partial[slot].setZero(n, n);
      partial[slot].selfadjointView<Eigen::Lower>().rankUpdate(phi);
    });
    for (std::size_t slot = 0; slot < count; ++slot) {
      total.triangularView<Eigen::Lower>() += partial[slot];
    }
  }

  for (const Resonance& r : resonances) {
    if (r.width >= kTrappedWidth) continue;
    double mass = 0.0;
    for (const Segment& s : segments) mass += lorentzian_mass(r, s);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      mass -= grid.weights[i] * lorentzian_density(r, grid.nodes[i]);
    }
    Eigen::VectorXcd v(n);
    for (int x = -window_halfwidth; x <= window_halfwidth; ++x) {
      v[x + window_halfwidth] = r.at(x);
    }
    total.selfadjointView<Eigen::Lower>().rankUpdate(v, mass);
    for (const Segment& s : segments) {
      const double side = s.lo >= 0.0 ? 1.0 : -1.0;
      if (side * r.k <= s.lo || side * r.k >= s.hi) continue;
      total += hole_background(d, r, v, side, offset, n);
    }
  }
  hermitian_fill(total);
  return total;
}

Eigen::MatrixXcd bias_part(const DisorderRealization& disorder,
                           const ReservoirFilling& filling,
                           const QuadratureSpec& quadrature, int window_halfwidth,
                           int level, int threads,
                           const std::vector<Resonance>& resonances) {
  return k_integral(disorder, {{filling.k_fermi_minus(), filling.k_fermi_plus()}},
                    quadrature, window_halfwidth, level, threads, resonances);
}

}  // namespace

Eigen::MatrixXcd scattering_correlation(const DisorderRealization& disorder,
                                        const ReservoirFilling& filling,
                                        const QuadratureSpec& quadrature,
                                        int window_halfwidth, int level,
                                        int threads) {
  const std::vector<Resonance> resonances =
      wire_resonances(disorder, quadrature.panel_width());
  return k_integral(disorder,
                    {{-filling.k_fermi_minus(), 0.0}, {0.0, filling.k_fermi_plus()}},
                    quadrature, window_halfwidth, level, threads, resonances);
}

Eigen::MatrixXcd bias_window_correlation(const DisorderRealization& disorder,
                                         const ReservoirFilling& filling,
                                         const QuadratureSpec& quadrature,
                                         int window_halfwidth, int level, int threads) {
  const std::vector<Resonance> resonances =
      wire_resonances(disorder, quadrature.panel_width());
  return bias_part(disorder, filling, quadrature, window_halfwidth, level, threads,
                   resonances);
}

namespace {

// theta edges of the contour panels, pi down to kContourFloor, then 0
constexpr double kContourFloor = 1e-14;

std::vector<double> contour_edges(int level) {
  std::vector<double> edges{std::numbers::pi};
  while (edges.back() > kContourFloor) edges.push_back(0.5 * edges.back());
  edges.push_back(0.0);
  std::vector<double> fine{edges.front()};
  const int split = 1 << level;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    for (int p = 1; p <= split; ++p) {
      fine.push_back(edges[e] + (edges[e + 1] - edges[e]) * p / split);
    }
  }
  return fine;
}

// Accumulates Im(G(z) dz) / pi on the centered block, G = (z - H_eff)^-1 of the
// full window with lead self-energies at both ends. For i <= j,
// G(i, j) = -G(i, j - 1) g_j with g_j the Green's function of sites >= j.
void add_resolvent(const Eigen::VectorXd& potential, cdouble z, cdouble dz, int offset,
                   int n, Eigen::MatrixXd& target, std::vector<cdouble>& a,
                   std::vector<cdouble>& left, std::vector<cdouble>& right) {
  const int full = static_cast<int>(potential.size());
  cdouble g = 0.5 * (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
  if (std::abs(g) > 1.0) g = 1.0 / g;
  for (int i = 0; i < full; ++i) a[i] = z - potential[i];
  a[0] -= g;
  a[full - 1] -= g;
  left[0] = 0.0;
  for (int i = 1; i < full; ++i) left[i] = 1.0 / (a[i - 1] - left[i - 1]);
  right[full - 1] = 0.0;
  for (int i = full - 2; i >= 0; --i) right[i] = 1.0 / (a[i + 1] - right[i + 1]);
  const cdouble scale = dz / std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const int fi = i + offset;
    cdouble gij = scale / (a[fi] - left[fi] - right[fi]);
    target(i, i) += gij.imag();
    for (int j = i + 1; j < n; ++j) {
      gij *= -right[j + offset - 1];
      target(i, j) += gij.imag();
    }
  }
}

}  // namespace

Eigen::MatrixXd equilibrium_projector(const DisorderRealization& disorder, double mu,
                                      int window_halfwidth, const QuadratureSpec& quadrature,
                                      int level, int threads) {
  const DisorderRealization d = with_window(disorder, window_halfwidth);
  const int hw = d.geometry.window_halfwidth();
  const int n = 2 * window_halfwidth + 1;
  const int offset = hw - window_halfwidth;
  Eigen::VectorXd potential(2 * hw + 1);
  for (int x = -hw; x <= hw; ++x) potential[x + hw] = d.at(x);

  // circle through mu and a point below the whole spectrum
  const double bottom = -3.0 - disorder.max_abs();
  const double center = 0.5 * (mu + bottom);
  const double radius = 0.5 * (mu - bottom);
  const auto rule = gauss_legendre<double>(quadrature.nodes_per_panel);
  const std::vector<double> edges = contour_edges(level);
  std::vector<double> theta, weight;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double hi = edges[e], lo = edges[e + 1];
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      theta.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[j]);
      weight.push_back(0.5 * (hi - lo) * rule.weights[j]);
    }
  }

  const std::size_t chunks = (theta.size() + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<cdouble> a(potential.size()), left(potential.size()),
        right(potential.size());
    partial[c] = Eigen::MatrixXd::Zero(n, n);
    const std::size_t hi = std::min(theta.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < hi; ++i) {
      const cdouble phase = std::polar(1.0, theta[i]);
      add_resolvent(potential, center + radius * phase,
                    cdouble(0.0, radius * weight[i]) * phase, offset, n, partial[c], a,
                    left, right);
    }
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  for (const Eigen::MatrixXd& p : partial) total += p;
  total.triangularView<Eigen::StrictlyLower>() = total.transpose();
  return total;
}

namespace {

Eigen::MatrixXcd occupied_part(const DisorderRealization& disorder,
                               const ReservoirFilling& filling,
                               const QuadratureSpec& quadrature, int window_halfwidth,
                               int level, int threads,
                               const std::vector<Resonance>& resonances) {
  Eigen::MatrixXcd c = equilibrium_projector(disorder, filling.mu_minus(), window_halfwidth,
                                             quadrature, level, threads)
                           .cast<cdouble>();
  if (filling.delta_mu() > 0.0) {
    c += bias_part(disorder, filling, quadrature, window_halfwidth, level, threads,
                   resonances);
  }
  return c;
}

[[noreturn]] void report_nonconvergence(int window_halfwidth, int level, double tolerance,
                                        const Eigen::MatrixXcd& coarse,
                                        const Eigen::MatrixXcd& fine) {
  Eigen::Index wi = 0, wj = 0;
  const double worst = (fine - coarse).cwiseAbs().maxCoeff(&wi, &wj);
  std::ostringstream msg;
  msg << "correlation quadrature did not converge after " << level
      << " refinements: worst entry C(" << static_cast<int>(wi) - window_halfwidth << ","
      << static_cast<int>(wj) - window_halfwidth << ") changed by " << worst
      << " (tolerance " << tolerance << ")";
  throw QuadratureError(msg.str());
}

}  // namespace

CorrelationMatrix build_correlation(const DisorderRealization& disorder,
                                    const ReservoirFilling& filling,
                                    const QuadratureSpec& quadrature,
                                    int window_halfwidth,
                                    const CorrelationOptions& options,
                                    CorrelationDiagnostics* diagnostics) {
  if (window_halfwidth < 0) throw UsageError("negative correlation window");
  quadrature.validate(disorder.geometry);

  const std::vector<Resonance> resonances =
      filling.delta_mu() > 0.0 ? wire_resonances(disorder, quadrature.panel_width())
                               : std::vector<Resonance>{};
  Eigen::MatrixXcd previous = occupied_part(disorder, filling, quadrature, window_halfwidth,
                                            0, options.threads, resonances);
  Eigen::MatrixXcd current;
  int level = 1;
  double change = 0.0;
  for (;; ++level) {
    current = occupied_part(disorder, filling, quadrature, window_halfwidth, level,
                            options.threads, resonances);
    change = (current - previous).cwiseAbs().maxCoeff();
    if (change < quadrature.tolerance) break;
    if (level >= quadrature.max_refinements) {
      report_nonconvergence(window_halfwidth, level, quadrature.tolerance, previous, current);
    }
    previous = std::move(current);
  }

  CorrelationMatrix c;
  c.window_halfwidth = window_halfwidth;
  const int n = 2 * window_halfwidth + 1;
  c.bound_part = Eigen::MatrixXcd::Zero(n, n);
  const DisorderRealization d = with_window(disorder, window_halfwidth);
  for (const BoundState& b : find_bound_states(d)) {
    if (b.energy >= filling.mu_minus()) continue;
    Eigen::VectorXcd v(n);
    for (int x = -window_halfwidth; x <= window_halfwidth; ++x) {
      v[x + window_halfwidth] = b.at(x);
    }
    c.bound_part.noalias() += v * v.adjoint();
    ++c.bound_states;
  }
  // the projector already holds the bound states
  c.values = current;
  if (!options.include_bound_states) {
    c.values -= c.bound_part;
    c.bound_part.setZero();
    c.bound_states = 0;
  }
  hermitian_fill(c.values);

  std::ostringstream prov;
  prov << "seed=" << disorder.seed << " W=" << disorder.strength
       << " L_C=" << disorder.geometry.wire_length() << " mu+=" << filling.mu_plus()
       << " mu-=" << filling.mu_minus() << " panels/k=" << quadrature.panels_per_unit_k
       << " nodes/panel=" << quadrature.nodes_per_panel << " level=" << level
       << " window=" << window_halfwidth;
  c.provenance = prov.str();
  if (diagnostics) {
    diagnostics->level = level;
    diagnostics->last_change = change;
    diagnostics->nodes =
        (contour_edges(level).size() - 1) * static_cast<std::size_t>(quadrature.nodes_per_panel);
    if (filling.delta_mu() > 0.0) {
      diagnostics->nodes += composite_grid(filling.k_fermi_minus(), filling.k_fermi_plus(),
                                           quadrature, level, resonance_hints(resonances))
                                .size();
    }
  }
  return c;
}

cdouble clean_kernel(const ReservoirFilling& filling, int x, int y) {
  const int d = x - y;
  const double kp = filling.k_fermi_plus();
  const double km = filling.k_fermi_minus();
  if (d == 0) return {(kp + km) / kTwoPi, 0.0};
  const cdouble numerator = std::polar(1.0, kp * d) - std::polar(1.0, -km * d);
  return numerator / cdouble(0.0, kTwoPi * d);
}

CorrelationMatrix cached_correlation(const CorrelationCache* cache,
                                     const DisorderRealization& disorder,
                                     const ReservoirFilling& filling,
                                     const QuadratureSpec& quadrature,
                                     int window_halfwidth,
                                     const CorrelationOptions& options) {
  if (!cache) {
    return build_correlation(disorder, filling, quadrature, window_halfwidth, options);
  }
  const std::string key =
      CorrelationCache::key(disorder, filling, quadrature, window_halfwidth, options);
  if (auto hit = cache->load(key)) return std::move(*hit);
  CorrelationMatrix c =
      build_correlation(disorder, filling, quadrature, window_halfwidth, options);
  cache->store(key, c);
  return c;
}

}  // namespace ness
