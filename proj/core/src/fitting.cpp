#include "motcorr/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

#include "motcorr/constants.hpp"
#include "motcorr/errors.hpp"

namespace motcorr {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kStepTol = 1e-10;

// Damped Gauss-Newton (Levenberg style) on a generic residual model.
// Returns (params, covariance, chi2, converged).
struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  bool converged = false;
};

template <typename ModelFn, typename JacFn>
LmResult levenberg(const CurveData& d, Eigen::VectorXd p, ModelFn model, JacFn jac) {
  const int n = static_cast<int>(d.x.size());
  const int np = static_cast<int>(p.size());
  auto chi2_of = [&](const Eigen::VectorXd& q) {
    const std::vector<double> f = model(q);
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = d.err[i] > 0 ? 1.0 / d.err[i] : 1.0;
      const double r = (d.y[i] - f[i]) * w;
      c += r * r;
    }
    return c;
  };

  double lambda = 1e-3;
  double chi2 = chi2_of(p);
  bool converged = false;
  Eigen::MatrixXd jtj(np, np);

  for (int it = 0; it < kMaxIterations; ++it) {
    const std::vector<double> f = model(p);
    const Eigen::MatrixXd J = jac(p, f);
    Eigen::VectorXd jtr = Eigen::VectorXd::Zero(np);
    jtj.setZero();
    for (int i = 0; i < n; ++i) {
      const double w = d.err[i] > 0 ? 1.0 / d.err[i] : 1.0;
      const double r = (d.y[i] - f[i]) * w;
      const Eigen::VectorXd ji = J.row(i).transpose() * w;
      jtr += ji * r;
      jtj += ji * ji.transpose();
    }
    // Marquardt damping with a floor: a parameter the data are locally
    // insensitive to has a near-zero diagonal entry, and purely
    // multiplicative damping would let its step diverge.
    const double dmax = std::max(jtj.diagonal().maxCoeff(), 1e-300);
    Eigen::MatrixXd damped = jtj;
    for (int k = 0; k < np; ++k)
      damped(k, k) += lambda * std::max(jtj(k, k), 1e-10 * dmax);
    const Eigen::VectorXd step = damped.ldlt().solve(jtr);
    if (!step.allFinite()) break;

    const Eigen::VectorXd cand = p + step;
    const double cand_chi2 = chi2_of(cand);
    if (cand_chi2 <= chi2) {
      const double rel = step.norm() / std::max(1e-300, p.norm());
      const double dchi2 = chi2 - cand_chi2;
      p = cand;
      chi2 = cand_chi2;
      lambda = std::max(1e-12, lambda * 0.3);
      // Only treat a vanishing chi^2 improvement as convergence in the
      // trusted Gauss-Newton regime; at large lambda steps are tiny anyway.
      if (rel < kStepTol ||
          (lambda <= 1e-3 && dchi2 < 1e-10 * std::max(1.0, chi2))) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        // Stuck with a flat direction; at a genuine minimum the gradient of
        // chi^2 is negligible, which still counts as convergence.
        converged = jtr.norm() < 1e-8 * std::max(1.0, chi2);
        break;
      }
    }
  }

  LmResult out;
  out.params = p;
  out.chi2 = chi2;
  out.converged = converged;
  // Covariance from the undamped normal matrix at the solution.
  out.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

} // namespace

CurveData curve_from_histogram(const CorrelationHistogram& h, double tau_min_s,
                               double tau_max_s) {
  if (!h.normalized)
    throw std::invalid_argument("curve_from_histogram: histogram must be normalized");
  CurveData d;
  for (std::size_t k = 0; k < h.bins(); ++k) {
    const double tau = h.lag_s(k);
    if (tau < tau_min_s) continue;
    if (tau_max_s > 0 && tau > tau_max_s) continue;
    if (h.err[k] <= 0) continue; // empty bins carry no information
    d.x.push_back(tau);
    d.y.push_back(h.g2[k]);
    d.err.push_back(h.err[k]);
  }
  return d;
}

ExpFit fit_exponential(const CurveData& d) {
  if (d.x.size() < 10)
    throw std::invalid_argument("fit_exponential: need at least 10 bins in range");
  if (d.x.size() != d.y.size() || d.x.size() != d.err.size())
    throw std::invalid_argument("fit_exponential: inconsistent curve arrays");
  const int n = static_cast<int>(d.x.size());

  // Seeds: baseline from the curve tail, A from the first point, tau_r from
  // the lag where |g2-1| has dropped to 1/e of its initial value.
  const double baseline0 = d.y.back();
  const double a0 = d.y.front() - baseline0;
  double tau0 = d.x[n / 2];
  if (std::abs(a0) > 0) {
    const double target = std::abs(a0) / std::exp(1.0);
    for (int i = 0; i < n; ++i) {
      if (std::abs(d.y[i] - baseline0) < target) {
        tau0 = std::max(d.x[i], d.x[1] - d.x[0]);
        break;
      }
    }
  }

  Eigen::VectorXd p(3);
  p << a0, tau0, baseline0;

  auto model = [&](const Eigen::VectorXd& q) {
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i)
      f[i] = q[2] + q[0] * std::exp(-d.x[i] / q[1]);
    return f;
  };
  auto jac = [&](const Eigen::VectorXd& q, const std::vector<double>&) {
    Eigen::MatrixXd J(n, 3);
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(-d.x[i] / q[1]);
      J(i, 0) = e;
      J(i, 1) = q[0] * e * d.x[i] / (q[1] * q[1]);
      J(i, 2) = 1.0;
    }
    return J;
  };

  const LmResult r = levenberg(d, p, model, jac);
  // Degenerate flat data is not an error: report A ~ 0 with its uncertainty.
  if (!r.converged && std::abs(r.params[0]) > 3.0 * std::sqrt(std::abs(r.covariance(0, 0))))
    throw NumericalError("fit_exponential: no convergence within iteration budget");

  ExpFit fit;
  fit.contrast = r.params[0];
  fit.tau_r = std::abs(r.params[1]);
  fit.baseline = r.params[2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) fit.covariance[i][j] = r.covariance(i, j);
  fit.chi2 = r.chi2;
  fit.dof = n - 3;
  fit.converged = r.converged;
  return fit;
}

ExpFit fit_exponential(const CurveData& d, double fixed_baseline) {
  if (d.x.size() < 10)
    throw std::invalid_argument("fit_exponential: need at least 10 bins in range");
  if (d.x.size() != d.y.size() || d.x.size() != d.err.size())
    throw std::invalid_argument("fit_exponential: inconsistent curve arrays");
  const int n = static_cast<int>(d.x.size());

  const double a0 = d.y.front() - fixed_baseline;
  double tau0 = d.x[n / 2];
  if (std::abs(a0) > 0) {
    const double target = std::abs(a0) / std::exp(1.0);
    for (int i = 0; i < n; ++i) {
      if (std::abs(d.y[i] - fixed_baseline) < target) {
        tau0 = std::max(d.x[i], d.x[1] - d.x[0]);
        break;
      }
    }
  }

  Eigen::VectorXd p(2);
  p << a0, tau0;

  auto model = [&](const Eigen::VectorXd& q) {
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i)
      f[i] = fixed_baseline + q[0] * std::exp(-d.x[i] / q[1]);
    return f;
  };
  auto jac = [&](const Eigen::VectorXd& q, const std::vector<double>&) {
    Eigen::MatrixXd J(n, 2);
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(-d.x[i] / q[1]);
      J(i, 0) = e;
      J(i, 1) = q[0] * e * d.x[i] / (q[1] * q[1]);
    }
    return J;
  };

  const LmResult r = levenberg(d, p, model, jac);
  if (!r.converged && std::abs(r.params[0]) > 3.0 * std::sqrt(std::abs(r.covariance(0, 0))))
    throw NumericalError("fit_exponential: no convergence within iteration budget");

  ExpFit fit;
  fit.contrast = r.params[0];
  fit.tau_r = std::abs(r.params[1]);
  fit.baseline = fixed_baseline;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) fit.covariance[i][j] = r.covariance(i, j);
  fit.chi2 = r.chi2;
  fit.dof = n - 2;
  fit.converged = r.converged;
  return fit;
}

RabiFit fit_rabi(const CurveData& d, double gamma) {
  if (gamma <= 0) throw std::domain_error("fit_rabi: gamma must be > 0");
  if (d.x.size() < 10)
    throw std::invalid_argument("fit_rabi: need at least 10 points");
  const int n = static_cast<int>(d.x.size());

  // Seed Omega from the first local maximum (tau_peak ~ pi / Omega').
  double tau_peak = d.x[n - 1];
  for (int i = 1; i + 1 < n; ++i) {
    if (d.y[i] > d.y[i - 1] && d.y[i] >= d.y[i + 1] && d.y[i] > 1.0) {
      tau_peak = d.x[i];
      break;
    }
  }
  const double omega0 = std::max(constants::pi / tau_peak, 0.3 * gamma);

  // Dimensionless parameters (Omega/gamma, (delta/gamma)^2). g2 is an even
  // function of the detuning, so fitting delta directly leaves a singular
  // Jacobian column at delta = 0; the model is analytic in delta^2, which
  // keeps the derivative finite there. The sign of delta is unobservable.
  Eigen::VectorXd p(2);
  p << omega0 / gamma, 0.0;

  auto model = [&](const Eigen::VectorXd& q) {
    const double omega = std::abs(q[0]) * gamma;
    const double delta = std::sqrt(std::max(q[1], 0.0)) * gamma;
    return two_level_g2_oracle({omega, delta, gamma}, d.x);
  };
  auto jac = [&](const Eigen::VectorXd& q, const std::vector<double>& f0) {
    Eigen::MatrixXd J(n, 2);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd qk = q;
      const double h = std::max(1e-6, 1e-6 * std::abs(q[k]));
      qk[k] += h;
      const std::vector<double> f1 = model(qk);
      for (int i = 0; i < n; ++i) J(i, k) = (f1[i] - f0[i]) / h;
    }
    return J;
  };

  const LmResult r = levenberg(d, p, model, jac);
  if (!r.converged)
    throw NumericalError("fit_rabi: no convergence within iteration budget");

  RabiFit fit;
  fit.rabi = std::abs(r.params[0]) * gamma;
  fit.delta = std::sqrt(std::max(r.params[1], 0.0)) * gamma;
  fit.chi2 = r.chi2;
  fit.converged = r.converged;
  const double eff = std::sqrt(fit.rabi * fit.rabi + fit.delta * fit.delta);
  fit.monotonic = eff <= 0.25 * gamma;
  return fit;
}

PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& pts) {
  if (pts.size() < 4)
    throw std::invalid_argument("fit_power_law: need at least 4 points");
  for (const auto& p : pts)
    if (p.lambda <= 0 || p.tau_r <= 0)
      throw std::invalid_argument("fit_power_law: nonpositive Lambda or tau_r");

  // Weighted linear regression: log tau = log c + alpha log Lambda.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  double chi2 = 0;
  for (const auto& p : pts) {
    const double x = std::log(p.lambda);
    const double y = std::log(p.tau_r);
    const double sigma = p.tau_err > 0 ? p.tau_err / p.tau_r : 1.0;
    const double w = 1.0 / (sigma * sigma);
    sw += w; sx += w * x; sy += w * y; sxx += w * x * x; sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0) throw NumericalError("fit_power_law: degenerate abscissa");
  PowerLawFit fit;
  fit.exponent = (sw * sxy - sx * sy) / det;
  const double intercept = (sxx * sy - sx * sxy) / det;
  fit.prefactor = std::exp(intercept);
  fit.exponent_err = std::sqrt(sw / det);
  for (const auto& p : pts) {
    const double sigma = p.tau_err > 0 ? p.tau_err / p.tau_r : 1.0;
    const double r = (std::log(p.tau_r) - intercept - fit.exponent * std::log(p.lambda)) / sigma;
    chi2 += r * r;
  }
  fit.chi2 = chi2;
  return fit;
}

ContrastScaling contrast_vs_n(const std::vector<std::pair<int, ExpFit>>& fits) {
  if (fits.size() < 3)
    throw std::invalid_argument("contrast_vs_n: need >= 3 atom numbers");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(fits.size());
  for (const auto& [N, f] : fits) {
    const double x = std::log(static_cast<double>(N));
    const double y = std::log(std::abs(f.contrast));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  if (det <= 0) throw std::invalid_argument("contrast_vs_n: distinct N values required");

  ContrastScaling out;
  out.slope = (n * sxy - sx * sy) / det;
  const double intercept = (sxx * sy - sx * sxy) / det;
  double ss = 0;
  for (const auto& [N, f] : fits) {
    const double r = std::log(std::abs(f.contrast)) - intercept -
                     out.slope * std::log(static_cast<double>(N));
    ss += r * r;
  }
  const double dof = std::max(1.0, n - 2.0);
  out.slope_err = std::sqrt(ss / dof * n / det);

  // tau_r constancy: chi^2 against the inverse-variance weighted mean.
  double sw = 0, swt = 0;
  for (const auto& [N, f] : fits) {
    const double s = std::max(f.tau_r_err(), 1e-18);
    sw += 1.0 / (s * s);
    swt += f.tau_r / (s * s);
  }
  out.tau_mean = swt / sw;
  for (const auto& [N, f] : fits) {
    const double s = std::max(f.tau_r_err(), 1e-18);
    const double r = (f.tau_r - out.tau_mean) / s;
    out.tau_chi2 += r * r;
  }
  boost::math::chi_squared dist(static_cast<double>(fits.size() - 1));
  out.tau_p_value = boost::math::cdf(boost::math::complement(dist, out.tau_chi2));
  return out;
}

double estimate_temperature(double tau_r, const AtomSpec& spec) {
  if (tau_r <= 0) throw std::domain_error("estimate_temperature: tau_r must be > 0");
  const double v_bar = spec.wavelength / (2.0 * tau_r);
  return spec.mass * v_bar * v_bar / constants::k_boltzmann;
}

} // namespace motcorr
