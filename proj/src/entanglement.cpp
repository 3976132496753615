#include "ness/entanglement.hpp"

#include <algorithm>
#include <cmath>

namespace ness {

Eigen::VectorXd entanglement_spectrum(const CorrelationMatrix& c, int L,
                                      bool include_bound_states) {
  return entanglement_spectrum(c.subsystem(L, include_bound_states));
}

EntanglementReport entanglement_report(const CorrelationMatrix& c, int L,
                                       bool include_bound_states) {
  EntanglementReport r;
  r.L = L;
  r.spectrum = entanglement_spectrum(c, L, include_bound_states);
  const auto ef = entropy_and_fluctuation(r.spectrum);
  r.entropy = ef.entropy;
  r.number_variance = ef.number_variance;
  r.includes_bound_states = include_bound_states && c.bound_states > 0;
  return r;
}

InequalityCheck check_inequality(double entropy, double number_variance, int L) {
  if (L < 3) throw UsageError("inequality check needs L >= 3");
  InequalityCheck out;
  out.lower_ok = number_variance <= entropy + 1e-12;
  if (number_variance > 0.0) {
    out.c_estimate = (entropy - 1.0) / (std::log(static_cast<double>(L)) * number_variance);
  } else if (entropy > 1.0) {
    out.upper_violation = true;
  }
  return out;
}

namespace {

struct Selection {
  std::vector<double> L;
  std::vector<double> S;
};

Selection select(const EntropyCurve& curve, FitRange range) {
  if (curve.lengths.size() != static_cast<std::size_t>(curve.entropy.size())) {
    throw FitError("curve lengths and entropies differ in size");
  }
  Selection s;
  for (std::size_t i = 0; i < curve.lengths.size(); ++i) {
    if (range.contains(curve.lengths[i])) {
      s.L.push_back(curve.lengths[i]);
      s.S.push_back(curve.entropy[static_cast<Eigen::Index>(i)]);
    }
  }
  return s;
}

ScalingFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  ScalingFit fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw FitError("degenerate fit range");
  fit.coefficients = qr.solve(y);
  fit.residuals = y - design * fit.coefficients;
  fit.points = static_cast<std::size_t>(y.size());
  fit.residual_rms = std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(y.size()));
  const Eigen::Index dof = y.size() - design.cols();
  const double sigma2 = dof > 0 ? fit.residuals.squaredNorm() / static_cast<double>(dof) : 0.0;
  const Eigen::MatrixXd cov = (design.transpose() * design).inverse() * sigma2;
  fit.standard_errors = cov.diagonal().cwiseSqrt();
  return fit;
}

int distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace

ScalingFit fit_log_law(const EntropyCurve& curve, FitRange range) {
  const Selection s = select(curve, range);
  if (s.L.size() < 4 || distinct(s.L) < 2) {
    throw FitError("log-law fit needs at least 4 points over distinct L");
  }
  const auto n = static_cast<Eigen::Index>(s.L.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = std::log(s.L[i]);
    design(i, 1) = 1.0;
    y[i] = s.S[i];
  }
  ScalingFit fit = least_squares(design, y);
  fit.model = ScalingModel::LogLaw;
  fit.range = range;
  return fit;
}

ScalingFit fit_quasi_volume(const EntropyCurve& curve, double delta_kf, FitRange range) {
  const Selection s = select(curve, range);
  if (s.L.size() < 4 || distinct(s.L) < 3) {
    throw FitError("quasi-volume fit needs at least 4 points over 3 distinct L");
  }
  if (!(delta_kf > 0.0)) throw FitError("quasi-volume fit needs dkF > 0");
  const auto n = static_cast<Eigen::Index>(s.L.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = s.L[i] * delta_kf;
    design(i, 1) = std::log(s.L[i]);
    design(i, 2) = 1.0;
    y[i] = s.S[i];
  }
  ScalingFit fit = least_squares(design, y);
  fit.model = ScalingModel::QuasiVolume;
  fit.range = range;
  return fit;
}

std::vector<EtaPoint> estimate_eta(const EntropyCurve& a, const EntropyCurve& b,
                                   const ReservoirFilling& filling_a,
                                   const ReservoirFilling& filling_b) {
  if (a.lengths != b.lengths || a.entropy.size() != b.entropy.size()) {
    throw UsageError("eta estimate needs identical L grids");
  }
  if (a.seeds != b.seeds) throw UsageError("eta estimate needs identical disorder seeds");
  const double dk = filling_a.delta_kf() - filling_b.delta_kf();
  if (dk == 0.0) throw UsageError("eta estimate needs different dkF");
  std::vector<EtaPoint> out;
  out.reserve(a.lengths.size());
  for (std::size_t i = 0; i < a.lengths.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out.push_back({a.lengths[i], (a.entropy[j] - b.entropy[j]) / (dk * a.lengths[i])});
  }
  return out;
}

ScalingFit reservoir_offset_fit(const EntropyCurve& curve, const EntropyCurve* reference,
                                double eta_at_wire, int wire_length,
                                const ReservoirFilling& filling) {
  const FitRange range{wire_length + 1, std::numeric_limits<int>::max()};
  const Selection s = select(curve, range);
  if (s.L.size() < 3 || distinct(s.L) < 2) {
    throw FitError("reservoir offset fit needs at least 3 points with L > L_C");
  }
  const auto n = static_cast<Eigen::Index>(s.L.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = std::log(s.L[i]);
    design(i, 1) = 1.0;
    y[i] = s.S[i];
  }
  ScalingFit fit = least_squares(design, y);
  fit.model = ScalingModel::ReservoirOffset;
  fit.range = range;
  fit.predicted_offset = eta_at_wire * wire_length * filling.delta_kf();
  if (reference) {
    if (reference->lengths != curve.lengths || reference->seeds != curve.seeds) {
      throw UsageError("reference curve must share the L grid and the seeds");
    }
    const Selection r = select(*reference, range);
    Eigen::MatrixXd d2(n, 2);
    Eigen::VectorXd y2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i, 0) = std::log(s.L[i] / wire_length);
      d2(i, 1) = 1.0;
      y2[i] = s.S[i] - r.S[i];
    }
    const ScalingFit diff = least_squares(d2, y2);
    fit.offset = diff.coefficients[1];
    fit.offset_error = diff.standard_errors[1];
  } else {
    fit.offset = fit.coefficients[1];
    fit.offset_error = fit.standard_errors[1];
  }
  return fit;
}

}  // namespace ness
