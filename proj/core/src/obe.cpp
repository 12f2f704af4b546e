#include "motcorr/obe.hpp"

#include <array>
#include <boost/numeric/odeint.hpp>
#include <stdexcept>

namespace motcorr {

namespace odeint = boost::numeric::odeint;

using BlochState = std::array<double, 3>; // (u, v, w)

namespace {

void check(const TwoLevelParams& p, const std::vector<double>& grid) {
  if (p.gamma <= 0) throw std::domain_error("two_level oracle: gamma must be > 0");
  double prev = -1.0;
  for (double t : grid) {
    if (t < 0 || t <= prev)
      throw std::domain_error("two_level oracle: tau grid must be non-negative and increasing");
    prev = t;
  }
}

} // namespace

double steady_excited_population(const TwoLevelParams& p) {
  if (p.gamma <= 0) throw std::domain_error("two_level oracle: gamma must be > 0");
  const double o2 = p.rabi * p.rabi;
  return 0.25 * o2 / (p.delta * p.delta + 0.25 * p.gamma * p.gamma + 0.5 * o2);
}

std::vector<double> two_level_excited_population(const TwoLevelParams& p,
                                                 const std::vector<double>& grid) {
  check(p, grid);
  if (grid.empty()) return {};

  auto bloch = [&p](const BlochState& s, BlochState& ds, double) {
    const auto [u, v, w] = s;
    ds[0] = p.delta * v - 0.5 * p.gamma * u;
    ds[1] = -p.delta * u - 0.5 * p.gamma * v - p.rabi * w;
    ds[2] = p.rabi * v - p.gamma * (w + 1.0);
  };

  std::vector<double> out;
  out.reserve(grid.size());
  BlochState s{0.0, 0.0, -1.0}; // ground state
  double t = 0.0;
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<BlochState>>(
      1e-12, 1e-10);
  const double dt0 = 0.01 / p.gamma;
  for (double target : grid) {
    if (target > t) {
      odeint::integrate_adaptive(stepper, bloch, s, t, target, dt0);
      t = target;
    }
    out.push_back(0.5 * (1.0 + s[2]));
  }
  return out;
}

std::vector<double> two_level_g2_oracle(const TwoLevelParams& p,
                                        const std::vector<double>& grid) {
  const double ss = steady_excited_population(p);
  if (ss <= 0)
    throw std::domain_error("two_level oracle: zero drive has no steady-state normalization");
  std::vector<double> out = two_level_excited_population(p, grid);
  for (double& v : out) v /= ss;
  return out;
}

} // namespace motcorr
