#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "motcorr/atom.hpp"
#include "motcorr/correlator.hpp"
#include "motcorr/obe.hpp"

namespace motcorr {

struct ExpFit {
  double contrast = 0.0;   // signed A in g2 = baseline + A exp(-tau/tau_r)
  double tau_r = 0.0;      // s
  double baseline = 1.0;
  std::array<std::array<double, 3>, 3> covariance{}; // (A, tau_r, baseline)
  double chi2 = 0.0;
  int dof = 0;
  bool converged = false;

  double contrast_err() const { return std::sqrt(covariance[0][0]); }
  double tau_r_err() const { return std::sqrt(covariance[1][1]); }
};

struct CurveData {
  std::vector<double> x;   // lag, s
  std::vector<double> y;   // g2
  std::vector<double> err; // per-point standard error
};

CurveData curve_from_histogram(const CorrelationHistogram& h, double tau_min_s = 0.0,
                               double tau_max_s = 0.0);

// Weighted least squares of g2(tau) = baseline + A exp(-tau/tau_r) by damped
// Gauss-Newton with analytic Jacobian; <= 200 iterations, step tol 1e-10.
// Throws NumericalError on non-convergence, std::invalid_argument for < 10 points.
ExpFit fit_exponential(const CurveData& data);

// Same model with the baseline frozen at a known asymptote; fits only
// (A, tau_r). Avoids the baseline/tau_r degeneracy on curves whose tail
// plateau is measured independently.
ExpFit fit_exponential(const CurveData& data, double fixed_baseline);

struct RabiFit {
  double rabi = 0.0;    // rad/s
  double delta = 0.0;   // rad/s (effective)
  double chi2 = 0.0;
  bool converged = false;
  bool monotonic = false; // overdamped regime (Omega <= Gamma/4), no oscillation
};

// Fits the two-level oracle curve over (Omega, delta) at fixed gamma;
// finite-difference Jacobian. Curve must resolve sub-1/Gamma lags.
RabiFit fit_rabi(const CurveData& data, double gamma);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_err = 0.0;
  double prefactor = 0.0;
  double chi2 = 0.0;
};

struct PowerLawPoint {
  double lambda;   // light-shift parameter (any fixed units)
  double tau_r;    // s
  double tau_err;  // s
};

// Weighted linear regression in log-log space.
// Throws std::invalid_argument for < 4 points or nonpositive values.
PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& points);

struct ContrastScaling {
  double slope = 0.0;      // d log|contrast| / d log N
  double slope_err = 0.0;
  double tau_chi2 = 0.0;   // chi^2 of tau_r against the weighted mean
  double tau_p_value = 0.0;
  double tau_mean = 0.0;
};

// >= 3 distinct atom numbers required.
ContrastScaling contrast_vs_n(const std::vector<std::pair<int, ExpFit>>& fits);

// v_bar = lambda / (2 tau_r), T = m v_bar^2 / k_B (1D rms speed convention).
// Throws std::domain_error for tau_r <= 0.
double estimate_temperature(double tau_r, const AtomSpec& spec);

} // namespace motcorr
