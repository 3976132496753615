#include "ness/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "ness/errors.hpp"
#include "ness/quadrature.hpp"

namespace ness {
namespace {

constexpr double kPi = std::numbers::pi;

cdouble plane_wave(double k, int x) { return std::polar(1.0, k * x); }

// Left-incident solution at |k| for the potential (mirrored when k < 0),
// unnormalized: transmitted wave seeded with unit amplitude.
struct Propagation {
  std::vector<cdouble> phi;  // sites -h-2 .. h+2 in the propagation frame
  cdouble incident;
  cdouble reflected;
  double determinant = 1.0;
};

Propagation propagate(const DisorderRealization& disorder, double k_abs,
                      bool mirror) {
  const int h = disorder.geometry.wire_halfwidth();
  const double energy = dispersion(k_abs);
  Propagation out;
  out.phi.resize(2 * h + 5);
  auto idx = [h](int y) { return y + h + 2; };
  out.phi[idx(h + 2)] = plane_wave(k_abs, h + 2);
  out.phi[idx(h + 1)] = plane_wave(k_abs, h + 1);

  // transfer product, maps (phi(y), phi(y+1)) -> (phi(y-1), phi(y))
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  for (int y = h + 1; y >= -h - 1; --y) {
    const double a = (mirror ? disorder.at(-y) : disorder.at(y)) - energy;
    out.phi[idx(y - 1)] = a * out.phi[idx(y)] - out.phi[idx(y + 1)];
    const double n00 = a * m00 - m10;
    const double n01 = a * m01 - m11;
    m10 = m00;
    m11 = m01;
    m00 = n00;
    m01 = n01;
  }
  out.determinant = m00 * m11 - m01 * m10;

  const int s1 = -h - 1;
  const int s2 = -h - 2;
  const cdouble f1 = out.phi[idx(s1)];
  const cdouble f2 = out.phi[idx(s2)];
  const cdouble a1 = plane_wave(k_abs, s1), b1 = plane_wave(-k_abs, s1);
  const cdouble a2 = plane_wave(k_abs, s2), b2 = plane_wave(-k_abs, s2);
  const cdouble det = a1 * b2 - a2 * b1;
  out.incident = (f1 * b2 - f2 * b1) / det;
  out.reflected = (a1 * f2 - a2 * f1) / det;
  if (!std::isfinite(out.incident.real()) || !std::isfinite(out.incident.imag()) ||
      !std::isfinite(out.reflected.real()) || !std::isfinite(out.reflected.imag()) ||
      std::abs(out.incident) == 0.0) {
    throw OverflowError(
        "transfer-matrix propagation overflowed; reduce the disorder strength "
        "or the wire length");
  }
  return out;
}

void check_wavenumber(double k) {
  if (!std::isfinite(k) || k <= -kPi || k > kPi) {
    throw DomainError("wavenumber outside (-pi, pi]");
  }
  const double ak = std::abs(k);
  if (ak < 1e-12 || kPi - ak < 1e-12) {
    throw DegenerateWavenumberError(
        "k = 0 or +-pi has zero group velocity; no scattering state");
  }
}

}  // namespace

cdouble ScatteringState::at(int x) const {
  if (x >= -window_halfwidth && x <= window_halfwidth) {
    return amplitudes[x + window_halfwidth];
  }
  const bool incoming_side = (k > 0) ? (x < 0) : (x > 0);
  if (incoming_side) return plane_wave(k, x) + r * plane_wave(-k, x);
  return t * plane_wave(k, x);
}

ScatteringState solve_scattering(const DisorderRealization& disorder, double k) {
  check_wavenumber(k);
  const bool mirror = k < 0;
  const Propagation prop = propagate(disorder, std::abs(k), mirror);
  const int h = disorder.geometry.wire_halfwidth();
  const int hw = disorder.geometry.window_halfwidth();

  ScatteringState state;
  state.k = k;
  state.energy = dispersion(k);
  state.wire_halfwidth = h;
  state.window_halfwidth = hw;
  state.t = 1.0 / prop.incident;
  state.r = prop.reflected / prop.incident;
  state.transfer_determinant = prop.determinant;
  state.amplitudes.resize(2 * hw + 1);
  for (int x = -hw; x <= hw; ++x) {
    cdouble value;
    if (x >= -h && x <= h) {
      const int y = mirror ? -x : x;
      value = prop.phi[y + h + 2] * state.t;
    } else {
      const bool incoming_side = (k > 0) ? (x < 0) : (x > 0);
      value = incoming_side ? plane_wave(k, x) + state.r * plane_wave(-k, x)
                            : state.t * plane_wave(k, x);
    }
    state.amplitudes[x + hw] = value;
  }
  return state;
}

LeadCoefficients lead_coefficients(const DisorderRealization& disorder, double k) {
  check_wavenumber(k);
  const Propagation prop = propagate(disorder, std::abs(k), k < 0);
  return {prop.reflected / prop.incident, 1.0 / prop.incident};
}

// ---------------------------------------------------------------------------
// bound states

cdouble BoundState::at(int x) const {
  const double sigma = energy < 0 ? 1.0 : -1.0;
  if (x > window_halfwidth) {
    const int j = x - window_halfwidth;
    return amplitudes[2 * window_halfwidth] * std::pow(sigma, j) * std::exp(-kappa * j);
  }
  if (x < -window_halfwidth) {
    const int j = -window_halfwidth - x;
    return amplitudes[0] * std::pow(sigma, j) * std::exp(-kappa * j);
  }
  return amplitudes[x + window_halfwidth];
}

namespace {

// Number of bound states below E = -2 cosh(kappa) for the wire potential v:
// the negative pivots of H_wire + g (|-h><-h| + |h><h|) - E, g = -exp(-kappa).
// Each eigenvalue of that matrix drops through E once as E rises to -2.
int bound_count(const Eigen::VectorXd& v, double kappa) {
  const double energy = -2.0 * std::cosh(kappa);
  const double g = -std::exp(-kappa);
  const Eigen::Index n = v.size();
  int count = 0;
  double d = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = v[i] - energy;
    if (i == 0) a += g;
    if (i == n - 1) a += g;
    d = i == 0 ? a : a - 1.0 / d;
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

// The vector is the eigenvector of H_wire + g (|-h><-h| + |h><h|) at the
// bound energy, g = -sigma exp(-kappa) the lead surface function; shooting
// alone is unstable on the decaying side of the state.
BoundState make_bound_state(const DisorderRealization& disorder, double kappa,
                            double sigma) {
  const int h = disorder.geometry.wire_halfwidth();
  const int hw = disorder.geometry.window_halfwidth();
  const int n = 2 * h + 1;
  const double energy = -sigma * 2.0 * std::cosh(kappa);
  const double g = -sigma * std::exp(-kappa);
  Eigen::VectorXd diag(n);
  for (int x = -h; x <= h; ++x) diag[x + h] = disorder.at(x);
  diag[0] += g;
  diag[n - 1] += g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, Eigen::VectorXd::Constant(n - 1, -1.0),
                                Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw ConsistencyError("bound-state eigen-decomposition failed");
  }
  Eigen::Index j = 0;
  (solver.eigenvalues().array() - energy).abs().minCoeff(&j);
  const Eigen::VectorXd wire = solver.eigenvectors().col(j);

  BoundState b;
  b.energy = energy;
  b.kappa = kappa;
  b.wire_halfwidth = h;
  b.window_halfwidth = hw;
  const double ratio = sigma * std::exp(-kappa);
  Eigen::VectorXd amp(2 * hw + 1);
  for (int x = -hw; x <= hw; ++x) {
    double v;
    if (x > h) {
      v = wire[n - 1] * std::pow(ratio, x - h);
    } else if (x < -h) {
      v = wire[0] * std::pow(ratio, -h - x);
    } else {
      v = wire[x + h];
    }
    amp[x + hw] = v;
  }
  const double q = std::exp(-2.0 * kappa);
  const double tails = (amp[0] * amp[0] + amp[2 * hw] * amp[2 * hw]) * q / (1.0 - q);
  const double norm = std::sqrt(amp.squaredNorm() + tails);
  b.amplitudes = (amp / norm).cast<cdouble>();
  return b;
}

void scan_side(const DisorderRealization& disorder, double sigma,
               std::vector<BoundState>& out) {
  const int h = disorder.geometry.wire_halfwidth();
  // states above the band are those below it for -v after x -> (-1)^x
  Eigen::VectorXd v(2 * h + 1);
  for (int x = -h; x <= h; ++x) v[x + h] = sigma * disorder.at(x);
  const double kappa_max = std::acosh(1.0 + disorder.max_abs()) + 1.0;
  constexpr double kKappaMin = 1e-9;

  // bisection on the count; count(kappa) falls as kappa grows
  std::vector<std::tuple<double, double, int, int>> stack{
      {kKappaMin, kappa_max, bound_count(v, kKappaMin), bound_count(v, kappa_max)}};
  std::vector<double> roots;
  while (!stack.empty()) {
    auto [lo, hi, n_lo, n_hi] = stack.back();
    stack.pop_back();
    const int inside = n_lo - n_hi;
    if (inside <= 0) continue;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      for (int i = 0; i < inside; ++i) roots.push_back(mid);
      continue;
    }
    const int n_mid = bound_count(v, mid);
    stack.emplace_back(mid, hi, n_mid, n_hi);
    stack.emplace_back(lo, mid, n_lo, n_mid);
  }
  for (double kappa : roots) out.push_back(make_bound_state(disorder, kappa, sigma));
}

}  // namespace

std::vector<BoundState> find_bound_states(const DisorderRealization& disorder,
                                          bool include_upper) {
  std::vector<BoundState> states;
  if (disorder.max_abs() == 0.0) return states;
  scan_side(disorder, 1.0, states);
  if (include_upper) scan_side(disorder, -1.0, states);
  std::sort(states.begin(), states.end(),
            [](const BoundState& a, const BoundState& b) { return a.energy < b.energy; });
  for (std::size_t i = 0; i < states.size(); ++i) states[i].index = static_cast<int>(i);
  return states;
}

// ---------------------------------------------------------------------------
// transport

double TransmissionCurve::mean_peak_spacing() const {
  if (peaks.size() < 2) return 0.0;
  return (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
}

TransmissionCurve transmission_curve(const DisorderRealization& disorder,
                                     double k_lo, double k_hi, double step) {
  if (!(0.0 < k_lo && k_lo < k_hi && k_hi < kPi)) {
    throw ParameterError("transmission range must satisfy 0 < k_lo < k_hi < pi");
  }
  if (!(step > 0.0) || step > peak_spacing(disorder.geometry) / 16.0 * (1 + 1e-12)) {
    throw ParameterError("transmission grid step must be <= peak_spacing / 16");
  }
  const auto n = static_cast<Eigen::Index>(std::ceil((k_hi - k_lo) / step - 1e-9)) + 1;
  TransmissionCurve curve;
  curve.k = Eigen::VectorXd::LinSpaced(n, k_lo, k_hi);
  curve.transmittance.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    curve.transmittance[i] = std::norm(lead_coefficients(disorder, curve.k[i]).t);
  }
  // local maxima standing more than kPeakProminence above the deeper of the
  // two valleys that separate them from higher ground (rounding noise on a
  // flat curve is not a peak)
  constexpr double kPeakProminence = 1e-9;
  const Eigen::VectorXd& t = curve.transmittance;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double v = t[i];
    if (!(v > t[i - 1] && v >= t[i + 1])) continue;
    double left = v, right = v;
    for (Eigen::Index j = i - 1; j >= 0 && t[j] <= v; --j) left = std::min(left, t[j]);
    for (Eigen::Index j = i + 1; j < n && t[j] <= v; ++j) right = std::min(right, t[j]);
    if (v - std::max(left, right) > kPeakProminence) curve.peaks.push_back(curve.k[i]);
  }
  return curve;
}

double conductance(const DisorderRealization& disorder,
                   const ReservoirFilling& filling, const QuadratureSpec& quadrature) {
  if (!(filling.delta_mu() > 0.0)) {
    throw ParameterError("conductance is undefined at zero bias");
  }
  const std::vector<PeakHint> hints =
      resonance_hints(wire_resonances(disorder, quadrature.panel_width()));
  auto integrate = [&](int level) {
    const KGrid grid = composite_grid(filling.k_fermi_minus(), filling.k_fermi_plus(),
                                      quadrature, level, hints);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double k = grid.nodes[i];
      sum += grid.weights[i] * std::norm(lead_coefficients(disorder, k).t) * 2.0 *
             std::sin(k);
    }
    return sum / filling.delta_mu();
  };
  double previous = integrate(0);
  for (int level = 1; level <= quadrature.max_refinements; ++level) {
    const double current = integrate(level);
    if (std::abs(current - previous) < quadrature.tolerance) return current;
    previous = current;
  }
  throw QuadratureError("conductance quadrature did not converge");
}

namespace {

// Lead self-energy -exp(i k(E)), continued through the band to complex E, and
// its derivative.
std::pair<cdouble, cdouble> lead_self_energy(cdouble e) {
  const cdouble k = std::acos(-e / 2.0);
  const cdouble phase = std::exp(cdouble(0.0, 1.0) * k);
  return {-phase, cdouble(0.0, -1.0) * phase / (2.0 * std::sin(k))};
}

// Newton step -D/D' for D(E) = det(E - H_wire - Sigma(E) at both ends),
// through the ratio recursion of the tridiagonal determinant.
cdouble newton_step(const DisorderRealization& disorder, cdouble e) {
  const int h = disorder.geometry.wire_halfwidth();
  const auto [sigma, dsigma] = lead_self_energy(e);
  cdouble rho = 0.0, drho = 0.0, log_derivative = 0.0;
  for (int x = -h; x <= h; ++x) {
    cdouble a = e - disorder.at(x);
    cdouble da = 1.0;
    if (x == -h || x == h) {
      a -= sigma;
      da -= dsigma;
    }
    if (x == h && h == 0) {
      a -= sigma;
      da -= dsigma;
    }
    if (x == -h) {
      rho = a;
      drho = da;
    } else {
      const cdouble next = a - 1.0 / rho;
      drho = da + drho / (rho * rho);
      rho = next;
    }
    log_derivative += drho / rho;
  }
  return -1.0 / log_derivative;
}

// Solves (tridiag(-1, d, -1)) x = b by Gaussian elimination with partial
// pivoting; stays usable when d is shifted onto an eigenvalue.
Eigen::VectorXcd solve_shifted(const Eigen::VectorXcd& d, Eigen::VectorXcd b) {
  const Eigen::Index n = d.size();
  Eigen::VectorXcd diag = d, up = Eigen::VectorXcd::Constant(n, -1.0),
                   up2 = Eigen::VectorXcd::Zero(n), low = Eigen::VectorXcd::Constant(n, -1.0);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(low[i]) > std::abs(diag[i])) {
      std::swap(diag[i], low[i]);
      const cdouble u = up[i];
      up[i] = diag[i + 1];
      diag[i + 1] = u;
      if (i + 1 < n - 1) {
        up2[i] = up[i + 1];
        up[i + 1] = 0.0;
      }
      std::swap(b[i], b[i + 1]);
    }
    if (diag[i] == 0.0) diag[i] = 1e-300;
    const cdouble f = low[i] / diag[i];
    diag[i + 1] -= f * up[i];
    if (i + 1 < n - 1) up[i + 1] -= f * up2[i];
    b[i + 1] -= f * b[i];
  }
  if (diag[n - 1] == 0.0) diag[n - 1] = 1e-300;
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    cdouble r = b[i];
    if (i + 1 < n) r -= up[i] * x[i + 1];
    if (i + 2 < n) r -= up2[i] * x[i + 2];
    x[i] = r / diag[i];
  }
  return x;
}

// Wire part of the resonance state: null vector of E - H_wire - Sigma(E) at
// the complex pole, by inverse iteration from the closed-wire state.
Eigen::VectorXcd pole_state(const Eigen::VectorXd& potential, cdouble pole,
                            const Eigen::VectorXd& closed) {
  const cdouble sigma = lead_self_energy(pole).first;
  Eigen::VectorXcd d = potential.cast<cdouble>().array() - pole;
  d[0] += sigma;
  d[d.size() - 1] += sigma;
  Eigen::VectorXcd state = closed.cast<cdouble>();
  for (int iter = 0; iter < 3; ++iter) {
    state = solve_shifted(d, state);
    state.normalize();
  }
  return state;
}

}  // namespace

std::vector<Resonance> wire_resonances(const DisorderRealization& disorder,
                                       double max_width) {
  const int h = disorder.geometry.wire_halfwidth();
  const int n = 2 * h + 1;
  std::vector<Resonance> out;
  if (disorder.max_abs() == 0.0) return out;
  Eigen::VectorXd diag(n);
  for (int x = -h; x <= h; ++x) diag[x + h] = disorder.at(x);
  const Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw ConsistencyError("closed-wire eigen-decomposition failed");
  }
  struct Candidate {
    int index;
    double coupling;
  };
  std::vector<Candidate> candidates;
  for (int j = 0; j < n; ++j) {
    if (!(std::abs(solver.eigenvalues()[j]) < 2.0)) continue;
    const double s = solver.eigenvectors()(0, j) * solver.eigenvectors()(0, j) +
                     solver.eigenvectors()(n - 1, j) * solver.eigenvectors()(n - 1, j);
    if (0.5 * s < 4.0 * max_width) candidates.push_back({j, s});
  }
  // narrowest first; later searches deflate the poles already found
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.coupling < b.coupling; });
  std::vector<cdouble> poles;
  for (const Candidate& c : candidates) {
    const int j = c.index;
    const double e = solver.eigenvalues()[j];
    Resonance r;
    r.energy = e;
    r.left_coupling = solver.eigenvectors()(0, j) * solver.eigenvectors()(0, j);
    r.right_coupling = solver.eigenvectors()(n - 1, j) * solver.eigenvectors()(n - 1, j);
    // first order in the coupling: pole at e + s Sigma(e)
    cdouble pole = e + c.coupling * lead_self_energy(e).first;
    {
      for (int iter = 0; iter < 100; ++iter) {
        cdouble step = newton_step(disorder, pole);
        if (!poles.empty()) {
          cdouble deflation = 0.0;
          for (const cdouble& p : poles) deflation += 1.0 / (pole - p);
          step = 1.0 / (1.0 / step + deflation);
        }
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
        pole += step;
        if (std::abs(step) < 1e-3 * std::abs(pole.imag()) || std::abs(step) < 1e-15) break;
      }
      poles.push_back(pole);
    }
    const cdouble k = std::acos(-pole / 2.0);
    r.k = k.real();
    r.width = std::abs(k.imag());
    if (!(r.width < max_width) || !(r.k > 0.0 && r.k < kPi)) continue;
    if (r.width < kTrappedWidth) {
      r.state = pole_state(diag, pole, solver.eigenvectors().col(j));
      r.left_coupling = std::norm(r.state[0]);
      r.right_coupling = std::norm(r.state[n - 1]);
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const Resonance& a, const Resonance& b) { return a.energy < b.energy; });
  return out;
}

double trapped_core(const Resonance& resonance) {
  return std::max(1e3 * resonance.width, 1e-9);
}

double trapped_occupation(const Resonance& resonance, const ReservoirFilling& filling) {
  if (resonance.energy < filling.mu_minus()) return 1.0;
  if (resonance.energy >= filling.mu_plus()) return 0.0;
  return resonance.left_share();
}

std::vector<PeakHint> resonance_hints(const std::vector<Resonance>& resonances) {
  std::vector<PeakHint> hints;
  for (const Resonance& r : resonances) {
    const bool trapped = r.width < kTrappedWidth;
    const double radius = trapped ? trapped_core(r) : 0.25 * r.width;
    hints.push_back({r.k, radius, trapped});
    hints.push_back({-r.k, radius, trapped});
  }
  return hints;
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::NearEquilibrium:
      return "near-equilibrium";
    case Regime::MesoscopicFluctuation:
      return "mesoscopic-fluctuation";
    case Regime::FarFromEquilibrium:
      return "far-from-equilibrium";
  }
  return "unknown";
}

Regime classify_regime(const ReservoirFilling& filling, const WireGeometry& geometry,
                       double ratio) {
  const double spacing = peak_spacing(geometry);
  const double dk = filling.delta_kf();
  if (dk >= ratio * spacing) return Regime::FarFromEquilibrium;
  if (dk <= spacing / ratio) return Regime::NearEquilibrium;
  return Regime::MesoscopicFluctuation;
}

}  // namespace ness
