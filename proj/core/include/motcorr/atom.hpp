#pragma once

#include <vector>

#include "motcorr/constants.hpp"

namespace motcorr {

// Physical description of the F -> F+1 cooling transition.
// Defaults are the Cs D2 cooling transition (F=4 -> F'=5).
struct AtomSpec {
  int f_ground = 4;
  int f_excited = 5;
  double gamma = 2.0 * constants::pi * 5.2e6; // natural linewidth, rad/s
  double wavelength = 852.35e-9;              // m
  double mass = 2.207e-25;                    // kg
  double sat_intensity = 11.0;                // W/m^2 (1.1 mW/cm^2)
  double g_factor_ground = 0.25;              // Cs 6S1/2 F=4
  double g_factor_excited = 0.4;              // Cs 6P3/2 F'=5

  int ground_dim() const { return 2 * f_ground + 1; }
  int excited_dim() const { return 2 * f_excited + 1; }
  int dim() const { return ground_dim() + excited_dim(); }

  // Throws std::invalid_argument on violated invariants
  // (F_e must equal F_g + 1; positive gamma, wavelength, mass).
  void validate() const;
};

// |<F m; 1 q | F+1, m+q>|^2 from the closed forms for an F -> F+1 transition,
// normalized so the stretched sigma+ coupling (m=F, q=+1) equals 1.
// Throws std::domain_error for |m| > F, |m+q| > F+1 or q outside {-1,0,+1}.
double clebsch_gordan_sq(int f_ground, int m, int q);

// strength(F,+1)/strength(F,-1) = (2F+1)(F+1).
double stretched_state_ratio(int f_ground);

// Tabulated couplings: excitation strengths per (ground m, q) and the decay
// branching view per excited m'. With the closed-form normalization the
// excitation strengths double as branching ratios and satisfy
// sum_q branching(m', q) = 1 for every excited sublevel.
class CouplingTable {
 public:
  CouplingTable(int f_ground, int f_excited);

  int f_ground() const { return fg_; }
  int f_excited() const { return fe_; }

  // Excitation strength |<F m; 1 q|F+1 m+q>|^2; 0 for closed channels.
  double excitation(int m, int q) const;
  // Decay branching from excited sublevel m' via spherical component q
  // (to ground sublevel m' - q); 0 for closed channels.
  double branching(int m_excited, int q) const;
  // Coupling amplitude sqrt(excitation); sign convention positive.
  double amplitude(int m, int q) const;

 private:
  int fg_, fe_;
  std::vector<double> strength_; // (2F_g+1) x 3, row-major over (m, q)
};

CouplingTable build_coupling_table(const AtomSpec& spec);

} // namespace motcorr
