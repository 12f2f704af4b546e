#include "motcorr/atom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace motcorr {

void AtomSpec::validate() const {
  if (f_ground < 0) throw std::invalid_argument("AtomSpec: F_g must be >= 0");
  if (f_excited != f_ground + 1)
    throw std::invalid_argument("AtomSpec: only F -> F+1 transitions are supported (F_e = F_g + 1)");
  if (gamma <= 0) throw std::invalid_argument("AtomSpec: gamma must be > 0");
  if (wavelength <= 0) throw std::invalid_argument("AtomSpec: wavelength must be > 0");
  if (mass <= 0) throw std::invalid_argument("AtomSpec: mass must be > 0");
  if (sat_intensity <= 0) throw std::invalid_argument("AtomSpec: sat_intensity must be > 0");
}

double clebsch_gordan_sq(int f, int m, int q) {
  if (f < 0) throw std::domain_error("clebsch_gordan_sq: F must be >= 0");
  if (q < -1 || q > 1)
    throw std::domain_error("clebsch_gordan_sq: q must be in {-1,0,+1}");
  if (std::abs(m) > f)
    throw std::domain_error("clebsch_gordan_sq: |m| exceeds F");
  if (std::abs(m + q) > f + 1)
    throw std::domain_error("clebsch_gordan_sq: |m+q| exceeds F+1");
  const double F = f, M = m;
  switch (q) {
    case +1:
      return (F + M + 1) * (F + M + 2) / ((2 * F + 1) * (2 * F + 2));
    case -1:
      return (F - M + 1) * (F - M + 2) / ((2 * F + 1) * (2 * F + 2));
    default:
      return (F - M + 1) * (F + M + 1) / ((2 * F + 1) * (F + 1));
  }
}

double stretched_state_ratio(int f) {
  if (f < 0) throw std::domain_error("stretched_state_ratio: F must be >= 0");
  return clebsch_gordan_sq(f, f, +1) / clebsch_gordan_sq(f, f, -1);
}

CouplingTable::CouplingTable(int f_ground, int f_excited)
    : fg_(f_ground), fe_(f_excited), strength_((2 * f_ground + 1) * 3, 0.0) {
  if (f_excited != f_ground + 1)
    throw std::invalid_argument("CouplingTable: F_e must equal F_g + 1");
  for (int m = -fg_; m <= fg_; ++m)
    for (int q = -1; q <= 1; ++q)
      strength_[(m + fg_) * 3 + (q + 1)] = clebsch_gordan_sq(fg_, m, q);
}

double CouplingTable::excitation(int m, int q) const {
  if (q < -1 || q > 1 || std::abs(m) > fg_ || std::abs(m + q) > fe_) return 0.0;
  return strength_[(m + fg_) * 3 + (q + 1)];
}

double CouplingTable::branching(int m_excited, int q) const {
  if (std::abs(m_excited) > fe_) return 0.0;
  const int m = m_excited - q;
  if (std::abs(m) > fg_) return 0.0;
  return excitation(m, q);
}

double CouplingTable::amplitude(int m, int q) const {
  return std::sqrt(excitation(m, q));
}

CouplingTable build_coupling_table(const AtomSpec& spec) {
  spec.validate();
  return {spec.f_ground, spec.f_excited};
}

} // namespace motcorr
