#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "motcorr/fitting.hpp"
#include "motcorr/rng.hpp"

using namespace motcorr;

TEST_SUITE_BEGIN("fitting");

namespace {
CurveData synthetic_exp(double a, double tau, double b, double noise,
                        std::uint64_t seed, int n = 60, double x_max = 30e-6) {
  Rng rng(seed);
  CurveData d;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * x_max / n;
    d.x.push_back(x);
    d.y.push_back(b + a * std::exp(-x / tau) + noise * rng.gaussian());
    d.err.push_back(noise > 0 ? noise : 1e-3);
  }
  return d;
}
} // namespace

TEST_CASE("exponential fit recovers synthetic parameters") {
  const auto d = synthetic_exp(-0.45, 6.0e-6, 0.97, 0.01, 5);
  const auto f = fit_exponential(d);
  CHECK(f.converged);
  CHECK(f.contrast == doctest::Approx(-0.45).epsilon(0.1));
  CHECK(f.tau_r == doctest::Approx(6.0e-6).epsilon(0.15));
  CHECK(f.baseline == doctest::Approx(0.97).epsilon(0.02));
  CHECK(std::abs(f.contrast + 0.45) < 3.0 * f.contrast_err());
  CHECK(std::abs(f.tau_r - 6.0e-6) < 3.0 * f.tau_r_err());
  CHECK(f.chi2 / f.dof < 2.0);
}

TEST_CASE("fixed-baseline fit matches the generator and shrinks the error") {
  const auto d = synthetic_exp(-0.45, 6.0e-6, 0.97, 0.01, 6);
  const auto free_fit = fit_exponential(d);
  const auto fixed_fit = fit_exponential(d, 0.97);
  CHECK(fixed_fit.baseline == 0.97);
  CHECK(fixed_fit.tau_r == doctest::Approx(6.0e-6).epsilon(0.15));
  CHECK(fixed_fit.tau_r_err() <= free_fit.tau_r_err() + 1e-12);
  CHECK(fixed_fit.dof == free_fit.dof + 1);
}

TEST_CASE("exponential fit input validation") {
  CurveData d = synthetic_exp(-0.4, 5e-6, 1.0, 0.01, 7, 5);
  CHECK_THROWS_AS(fit_exponential(d), std::invalid_argument);
  d = synthetic_exp(-0.4, 5e-6, 1.0, 0.01, 7);
  d.err.pop_back();
  CHECK_THROWS_AS(fit_exponential(d), std::invalid_argument);
}

TEST_CASE("rabi fit recovers the drive strength from the oracle curve") {
  const double gamma = 2.0 * 3.14159265358979 * 5.2e6;
  const TwoLevelParams truth{2.0 * gamma, 0.0, gamma};
  CurveData d;
  Rng rng(11);
  for (int i = 1; i <= 120; ++i) d.x.push_back(i * 0.05 / gamma);
  const auto y = two_level_g2_oracle(truth, d.x);
  for (double v : y) {
    d.y.push_back(v + 0.01 * rng.gaussian());
    d.err.push_back(0.01);
  }
  const auto f = fit_rabi(d, gamma);
  CHECK(f.converged);
  CHECK(f.rabi == doctest::Approx(2.0 * gamma).epsilon(0.05));
  CHECK_FALSE(f.monotonic);
}

TEST_CASE("power-law fit recovers the exponent") {
  std::vector<PowerLawPoint> pts;
  Rng rng(21);
  for (double lam : {0.3, 0.5, 0.8, 1.2, 1.9}) {
    const double tau = 5e-6 * std::pow(lam, -0.5);
    pts.push_back({lam, tau * (1.0 + 0.02 * rng.gaussian()), 0.02 * tau});
  }
  const auto f = fit_power_law(pts);
  CHECK(f.exponent == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(std::abs(f.exponent + 0.5) < 3.0 * f.exponent_err);
  CHECK_THROWS_AS(fit_power_law({{1.0, 1.0, 0.1}, {2.0, 0.7, 0.1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_power_law({{1.0, 1.0, 0.1},
                                 {2.0, 0.7, 0.1},
                                 {3.0, 0.6, 0.1},
                                 {-1.0, 0.5, 0.1}}),
                  std::invalid_argument);
}

TEST_CASE("curve windowing from a histogram") {
  CorrelationHistogram h;
  h.bin_width_ns = 500;
  h.counts.assign(40, 100);
  h.g2.assign(40, 1.0);
  h.err.assign(40, 0.1);
  h.normalized = true;
  const auto all = curve_from_histogram(h);
  CHECK(all.x.size() == 40);
  const auto windowed = curve_from_histogram(h, 3.0e-6, 15.0e-6);
  REQUIRE(!windowed.x.empty());
  CHECK(windowed.x.front() >= 3.0e-6);
  CHECK(windowed.x.back() <= 15.0e-6);
}

TEST_CASE("temperature inversion brackets the documented values") {
  AtomSpec cs;  // Cs D2 defaults
  // v_bar = lambda / (2 tau_r), T = m v_bar^2 / k_B.
  const double t1 = estimate_temperature(6.53e-6, cs);
  const double t2 = estimate_temperature(17.0e-6, cs);
  CHECK(t1 == doctest::Approx(68e-6).epsilon(0.03));
  CHECK(t2 == doctest::Approx(10e-6).epsilon(0.03));
  CHECK_THROWS_AS(estimate_temperature(0.0, cs), std::domain_error);
}

TEST_CASE("contrast scaling helper") {
  std::vector<std::pair<int, ExpFit>> fits;
  for (int n = 1; n <= 4; ++n) {
    ExpFit f;
    f.contrast = -0.6 / n;
    f.tau_r = 8.0e-6;
    f.covariance[0][0] = 1e-4;
    f.covariance[1][1] = 1e-13;
    fits.push_back({n, f});
  }
  const auto s = contrast_vs_n(fits);
  CHECK(s.slope == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(s.tau_p_value > 0.9);
}

TEST_SUITE_END();
