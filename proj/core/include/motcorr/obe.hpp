#pragma once

#include <vector>

namespace motcorr {

struct TwoLevelParams {
  double rabi;  // rad/s
  double delta; // rad/s
  double gamma; // rad/s
};

// Steady-state excited population (Omega^2/4) / (delta^2 + Gamma^2/4 + Omega^2/2).
double steady_excited_population(const TwoLevelParams& p);

// rho_ee(tau) integrated from rho_gg(0)=1, rho_ee(0)=0.
// Adaptive integration, relative error < 1e-8.
// Throws std::domain_error for gamma <= 0 or a non-increasing/negative grid.
std::vector<double> two_level_excited_population(const TwoLevelParams& p,
                                                 const std::vector<double>& tau_grid);

// g2(tau) = rho_ee(tau) / rho_ee(inf).
std::vector<double> two_level_g2_oracle(const TwoLevelParams& p,
                                        const std::vector<double>& tau_grid);

} // namespace motcorr
