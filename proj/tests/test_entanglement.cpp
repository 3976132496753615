#include "doctest.h"

#include <cmath>

#include "ness/entanglement.hpp"

using namespace ness;

namespace {

CorrelationMatrix clean_matrix(const ReservoirFilling& f, int h) {
  CorrelationMatrix c;
  c.window_halfwidth = h;
  c.values.resize(2 * h + 1, 2 * h + 1);
  for (int x = -h; x <= h; ++x) {
    for (int y = -h; y <= h; ++y) c.values(x + h, y + h) = clean_kernel(f, x, y);
  }
  c.bound_part = Eigen::MatrixXcd::Zero(2 * h + 1, 2 * h + 1);
  return c;
}

EntropyCurve synthetic(const std::vector<int>& lengths, double slope, double volume) {
  EntropyCurve c;
  c.lengths = lengths;
  c.seeds = {1, 2, 3};
  c.entropy.resize(static_cast<Eigen::Index>(lengths.size()));
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    c.entropy[static_cast<Eigen::Index>(i)] = volume * lengths[i] + slope * std::log(lengths[i]) + 1.0;
  }
  return c;
}

}  // namespace

TEST_CASE("binary entropy and simple spectra") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)));

  Eigen::VectorXd half = Eigen::VectorXd::Constant(1, 0.5);
  const auto one = entropy_and_fluctuation(half);
  CHECK(one.entropy == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(one.number_variance == doctest::Approx(0.25));
  CHECK(one.margin() >= 0.0);

  const Eigen::VectorXd nu = entanglement_spectrum(Eigen::MatrixXd(Eigen::MatrixXd::Identity(6, 6) * 0.5));
  CHECK((nu.array() - 0.5).abs().maxCoeff() < 1e-14);
  const Eigen::VectorXd filled = entanglement_spectrum(Eigen::MatrixXd(Eigen::MatrixXd::Identity(6, 6)));
  const auto ef = entropy_and_fluctuation(filled);
  CHECK(ef.entropy == 0.0);
  CHECK(ef.number_variance == 0.0);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 0) = 1.1;
  CHECK_THROWS_AS(entanglement_spectrum(bad), ConsistencyError);
  bad(0, 0) = 1.0 + 5e-11;
  CHECK(entanglement_spectrum(bad)[0] == 1.0);
}

TEST_CASE("clean half filling spectrum is particle-hole symmetric") {
  const CorrelationMatrix c = clean_matrix(ReservoirFilling::equilibrium(0.0), 50);
  const Eigen::VectorXd nu = entanglement_spectrum(c, 100);
  CHECK(nu.size() == 101);
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    CHECK(std::abs(nu[i] - (1.0 - nu[nu.size() - 1 - i])) < 1e-8);
  }
  CHECK(nu.sum() == doctest::Approx(c.subsystem(100).trace().real()).epsilon(1e-10));
}

TEST_CASE("clean equilibrium follows the c=1 log law") {
  const ReservoirFilling f = ReservoirFilling::equilibrium(-1.0);
  const CorrelationMatrix c = clean_matrix(f, 100);
  EntropyCurve curve;
  double previous = 0.0, lo = 1e9, hi = -1e9;
  for (int L : {25, 50, 100, 200}) {
    const EntanglementReport r = entanglement_report(c, L);
    CHECK(r.number_variance <= r.entropy + 1e-12);
    CHECK(r.entropy >= previous - 1e-8);
    previous = r.entropy;
    const double rest = r.entropy - std::log(static_cast<double>(L)) / 3;
    lo = std::min(lo, rest);
    hi = std::max(hi, rest);
    curve.lengths.push_back(L);
  }
  CHECK(hi - lo < 0.05);
  curve.entropy.resize(4);
  for (int i = 0; i < 4; ++i) curve.entropy[i] = entanglement_report(c, curve.lengths[i]).entropy;
  const ScalingFit fit = fit_log_law(curve);
  CHECK(fit.coefficients[0] >= 0.25);
  CHECK(fit.coefficients[0] <= 0.42);

  SUBCASE("electron-hole partner filling") {
    const ReservoirFilling g = ReservoirFilling::from_bias(-1.1, 0.4);
    const ReservoirFilling mirrored(-g.mu_minus(), -g.mu_plus());
    const CorrelationMatrix a = clean_matrix(g, 40);
    const CorrelationMatrix b = clean_matrix(mirrored, 40);
    const auto ra = entanglement_report(a, 60);
    const auto rb = entanglement_report(b, 60);
    CHECK(ra.entropy == doctest::Approx(rb.entropy).epsilon(1e-10));
    CHECK(ra.number_variance == doctest::Approx(rb.number_variance).epsilon(1e-10));
  }
}

TEST_CASE("inequality check") {
  const auto ok = check_inequality(2.0, 0.5, 100);
  CHECK(ok.lower_ok);
  REQUIRE(ok.c_estimate);
  CHECK(*ok.c_estimate == doctest::Approx(1.0 / (std::log(100.0) * 0.5)));
  CHECK(!check_inequality(0.4, 0.5, 100).lower_ok);
  const auto trivial = check_inequality(0.0, 0.0, 10);
  CHECK(trivial.lower_ok);
  CHECK(!trivial.c_estimate);
  CHECK(!trivial.upper_violation);
  CHECK(check_inequality(1.5, 0.0, 10).upper_violation);
  CHECK_THROWS_AS(check_inequality(1.0, 0.5, 2), UsageError);
}

TEST_CASE("fits on synthetic curves") {
  const std::vector<int> L{25, 51, 101, 201, 401};
  const ScalingFit log = fit_log_law(synthetic(L, 0.5, 0.0));
  CHECK(log.coefficients[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(log.coefficients[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log.residual_rms < 1e-12);
  CHECK_THROWS_AS(fit_log_law(synthetic({25, 51, 101}, 0.5, 0.0)), FitError);
  CHECK_THROWS_AS(fit_log_law(synthetic(L, 0.5, 0.0), FitRange{1000, 2000}), FitError);

  const double dkf = 0.6;
  const ScalingFit qv = fit_quasi_volume(synthetic(L, 2.0, 0.1 * dkf), dkf);
  CHECK(qv.coefficients[0] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(qv.coefficients[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit_log_law(synthetic(L, 2.0, 0.1 * dkf)).residual_rms > 1.0);
}

TEST_CASE("eta estimator") {
  const std::vector<int> L{51, 101, 201, 401};
  const ReservoirFilling fa = ReservoirFilling::from_bias(-1.25, 0.9);
  const ReservoirFilling fb = ReservoirFilling::from_bias(-1.25, 0.8);
  auto family = [&](const ReservoirFilling& f) {
    EntropyCurve c = synthetic(L, 2.0, 0.1 * f.delta_kf());
    return c;
  };
  for (const EtaPoint& p : estimate_eta(family(fa), family(fb), fa, fb)) {
    CHECK(p.eta == doctest::Approx(0.1).epsilon(1e-10));
  }
  for (const EtaPoint& p : estimate_eta(family(fa), family(fa), fa, fb)) CHECK(p.eta == 0.0);
  EntropyCurve other = family(fb);
  other.seeds = {4, 5, 6};
  CHECK_THROWS_AS(estimate_eta(family(fa), other, fa, fb), UsageError);
  CHECK_THROWS_AS(estimate_eta(family(fa), family(fb), fa, fa), UsageError);
}

TEST_CASE("reservoir offset fit") {
  const int lc = 401;
  const std::vector<int> L{401, 501, 601, 801, 1001, 1201};
  const ReservoirFilling f = ReservoirFilling::from_bias(-1.25, 0.9);
  const double eta = 0.12;
  const double offset = eta * lc * f.delta_kf();
  EntropyCurve reference = synthetic(L, 1.0 / 3, 0.0);
  EntropyCurve curve = reference;
  for (Eigen::Index i = 0; i < curve.entropy.size(); ++i) curve.entropy[i] += offset;

  const ScalingFit fit = reservoir_offset_fit(curve, &reference, eta, lc, f);
  CHECK(fit.offset == doctest::Approx(offset).epsilon(1e-10));
  CHECK(fit.predicted_offset == doctest::Approx(offset).epsilon(1e-12));
  CHECK(fit.coefficients[0] == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK(reservoir_offset_fit(reference, &reference, 0.0, lc, f).offset == doctest::Approx(0.0));
  CHECK_THROWS_AS(reservoir_offset_fit(synthetic({401, 501, 601}, 1.0, 0.0), nullptr, eta, lc, f),
                  FitError);
}
