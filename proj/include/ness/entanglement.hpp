#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ness/correlation.hpp"
#include "ness/errors.hpp"

namespace ness {

/// h(nu) = -nu ln nu - (1 - nu) ln(1 - nu), with h(0) = h(1) = 0.
template <typename Scalar>
Scalar binary_entropy(Scalar nu) {
  using std::log;
  Scalar h = 0;
  if (nu > Scalar(0)) h -= nu * log(nu);
  if (nu < Scalar(1)) h -= (Scalar(1) - nu) * log(Scalar(1) - nu);
  return h;
}

inline constexpr double kSpectrumClamp = 1e-10;
inline constexpr double kSpectrumLimit = 1e-8;

/// Eigenvalues of a Hermitian correlation block, sorted descending and
/// clamped into [0, 1]. Values further than 1e-8 outside raise ConsistencyError.
template <typename Derived>
Eigen::VectorXd entanglement_spectrum(const Eigen::MatrixBase<Derived>& block) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(block), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConsistencyError("eigen-decomposition of the correlation block failed");
  }
  Eigen::VectorXd nu = solver.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (nu[i] < -kSpectrumLimit || nu[i] > 1.0 + kSpectrumLimit || !std::isfinite(nu[i])) {
      throw ConsistencyError(
          "correlation eigenvalue outside [0, 1]; the quadrature is not converged");
    }
    nu[i] = std::clamp(nu[i], 0.0, 1.0);
  }
  return nu;
}

Eigen::VectorXd entanglement_spectrum(const CorrelationMatrix& c, int L,
                                      bool include_bound_states = true);

struct EntropyFluctuation {
  double entropy = 0.0;          ///< S_L in nats
  double number_variance = 0.0;  ///< dN_L^2
  double margin() const { return entropy - number_variance; }
};

template <typename Derived>
EntropyFluctuation entropy_and_fluctuation(const Eigen::MatrixBase<Derived>& spectrum) {
  EntropyFluctuation out;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double nu = spectrum[i];
    out.entropy += binary_entropy(nu);
    out.number_variance += nu * (1.0 - nu);
  }
  return out;
}

struct EntanglementReport {
  int L = 0;
  Eigen::VectorXd spectrum;
  double entropy = 0.0;
  double number_variance = 0.0;
  bool includes_bound_states = true;
};

EntanglementReport entanglement_report(const CorrelationMatrix& c, int L,
                                       bool include_bound_states = true);

struct InequalityCheck {
  bool lower_ok = true;
  /// (S - 1) / (ln L * dN^2): the smallest c making the upper bound tight.
  std::optional<double> c_estimate;
  /// dN^2 = 0 while S > 1: the upper bound cannot hold.
  bool upper_violation = false;
};

InequalityCheck check_inequality(double entropy, double number_variance, int L);
inline InequalityCheck check_inequality(const EntanglementReport& r) {
  return check_inequality(r.entropy, r.number_variance, r.L);
}

/// S_L sampled on an L grid; `seeds` identifies the disorder ensemble.
struct EntropyCurve {
  std::vector<int> lengths;
  Eigen::VectorXd entropy;
  std::vector<std::uint64_t> seeds;
};

struct FitRange {
  int lo = 0;
  int hi = std::numeric_limits<int>::max();
  bool contains(int L) const { return L >= lo && L <= hi; }
};

enum class ScalingModel { LogLaw, QuasiVolume, ReservoirOffset };

struct ScalingFit {
  ScalingModel model = ScalingModel::LogLaw;
  FitRange range;
  /// LogLaw: (alpha, beta) of alpha ln L + beta.
  /// QuasiVolume: (eta, alpha, beta) of eta L dkF + alpha ln L + beta.
  /// ReservoirOffset: (alpha, const) of const + alpha ln L.
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd residuals;
  double residual_rms = 0.0;
  std::size_t points = 0;
  /// ReservoirOffset only.
  double offset = std::numeric_limits<double>::quiet_NaN();
  double offset_error = std::numeric_limits<double>::quiet_NaN();
  double predicted_offset = std::numeric_limits<double>::quiet_NaN();
};

ScalingFit fit_log_law(const EntropyCurve& curve, FitRange range = {});
ScalingFit fit_quasi_volume(const EntropyCurve& curve, double delta_kf,
                            FitRange range = {});

struct EtaPoint {
  int L = 0;
  double eta = 0.0;
};

/// [S_L(a) - S_L(b)] / [(dkF_a - dkF_b) L] on a common grid and ensemble.
std::vector<EtaPoint> estimate_eta(const EntropyCurve& a, const EntropyCurve& b,
                                   const ReservoirFilling& filling_a,
                                   const ReservoirFilling& filling_b);

/// Log law with an offset for L beyond the wire. With a reference curve
/// (same grid, zero bias) the offset is the intercept at L = L_C of
/// S_L - S_L^ref fitted as offset + alpha' ln(L / L_C); otherwise it is the
/// raw intercept of S_L = const + alpha ln L. The prediction is
/// eta_at_wire * L_C * dkF.
ScalingFit reservoir_offset_fit(const EntropyCurve& curve, const EntropyCurve* reference,
                                double eta_at_wire, int wire_length,
                                const ReservoirFilling& filling);

}  // namespace ness
