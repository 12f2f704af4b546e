#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "motcorr/obe.hpp"

using namespace motcorr;

TEST_SUITE_BEGIN("obe");

namespace {
std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}
} // namespace

TEST_CASE("steady-state excited population closed form") {
  TwoLevelParams p{2.0e7, 0.0, 3.0e7};
  const double expected = (p.rabi * p.rabi / 4.0) /
                          (p.delta * p.delta + p.gamma * p.gamma / 4.0 +
                           p.rabi * p.rabi / 2.0);
  CHECK(steady_excited_population(p) == doctest::Approx(expected).epsilon(1e-12));
  // Strong drive saturates at 1/2.
  TwoLevelParams strong{1.0e12, 0.0, 3.0e7};
  CHECK(steady_excited_population(strong) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("population transient approaches the steady state") {
  TwoLevelParams p{5.0e7, -2.0e7, 3.0e7};
  const auto grid = linspace(0.0, 30.0 / p.gamma, 400);
  const auto rho = two_level_excited_population(p, grid);
  REQUIRE(rho.size() == grid.size());
  CHECK(rho.front() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(rho.back() == doctest::Approx(steady_excited_population(p)).epsilon(1e-5));
  for (double v : rho) {
    CHECK(v >= -1e-12);
    CHECK(v <= 0.5 + 1e-12);
  }
}

TEST_CASE("g2 oracle: antibunching, Rabi overshoot, unit asymptote") {
  const double gamma = 2.0 * 3.14159265358979 * 5.2e6;
  TwoLevelParams p{2.0 * gamma, 0.0, gamma};
  const auto grid = linspace(0.0, 14.0 / gamma, 1400);
  const auto g2 = two_level_g2_oracle(p, grid);
  CHECK(g2.front() == doctest::Approx(0.0).epsilon(1e-10));
  // Omega = 2 Gamma is underdamped: the first Rabi maximum overshoots 1.
  double peak = 0.0;
  for (double v : g2) peak = std::max(peak, v);
  CHECK(peak > 1.2);
  CHECK(g2.back() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("weak overdamped drive rises monotonically") {
  const double gamma = 3.0e7;
  TwoLevelParams p{0.05 * gamma, 0.0, gamma};
  const auto grid = linspace(0.0, 10.0 / gamma, 300);
  const auto g2 = two_level_g2_oracle(p, grid);
  for (std::size_t i = 1; i < g2.size(); ++i) CHECK(g2[i] >= g2[i - 1] - 1e-9);
}

TEST_CASE("invalid inputs throw") {
  TwoLevelParams p{1.0e7, 0.0, 0.0};
  CHECK_THROWS_AS(two_level_excited_population(p, {0.0, 1e-8}), std::domain_error);
  TwoLevelParams ok{1.0e7, 0.0, 3.0e7};
  CHECK_THROWS_AS(two_level_excited_population(ok, {1e-8, 0.5e-8}), std::domain_error);
}

TEST_SUITE_END();
