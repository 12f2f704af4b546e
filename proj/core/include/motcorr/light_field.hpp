#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "motcorr/constants.hpp"

namespace motcorr {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

// Phase-controlled 3D MOT interference field. The field pattern is
//   E = (sin kz + sin ky e^{i psi},
//        cos kz + cos kx e^{i phi},
//        sin kx e^{i phi} + cos ky e^{i psi}) * amplitude,
// with amplitude = sqrt(I_beam / I_0) so that a single traveling-wave term
// carries the per-beam intensity in saturation-intensity units.
struct FieldConfig {
  double phi = 0.0;        // rad
  double psi = 0.0;        // rad
  double wavenumber = 2.0 * constants::pi / 852.35e-9; // 1/m
  double beam_intensity = 1.0; // I per beam, units of I_0

  double amplitude() const;
  bool is_mot00() const;
  // Throws std::invalid_argument on k <= 0 or negative intensity.
  void validate() const;
};

struct FieldSample {
  CVec3 e;             // lab Cartesian basis
  double intensity;    // |E|^2, single-beam units
  std::array<std::complex<double>, 3> spherical; // (A_{-1}, A_0, A_{+1})
  Vec3 quant_axis;     // axis the spherical amplitudes refer to
  double linearity_defect; // |Im(E* x E)|; 0 iff locally linear
};

// Quadrupole coil field B(r) = gradient * (-x/2, -y/2, z); `gradient` is the
// axial gradient in T/m (the transverse gradient is half of it).
struct QuadrupoleField {
  double gradient = 0.125; // 12.5 G/cm in T/m
};

Vec3 quadrupole_b(const Vec3& r, const QuadrupoleField& q);

// Spherical decomposition of a complex field vector about a unit quantization
// axis: A_0 = E . z_q, A_{+-1} = -+ (E . x_q +- i E . y_q) / sqrt(2) in a
// deterministic right-handed frame (x_q, y_q, z_q = axis).
// Throws std::domain_error for a zero axis.
std::array<std::complex<double>, 3> spherical_decompose(const CVec3& e,
                                                        const Vec3& axis);

// Deterministic right-handed orthonormal frame with z = axis.
void quantization_frame(const Vec3& axis, Vec3& x_q, Vec3& y_q, Vec3& z_q);

FieldSample field_at(const Vec3& r, const FieldConfig& cfg,
                     const Vec3& quant_axis = Vec3::UnitZ());

struct BistabilityResult {
  double beta_deg; // angle between polarization and B direction, [0, 180]
  bool bistable;   // |90 - beta| < 45
};

// Throws std::domain_error on zero-length inputs.
BistabilityResult bistability_check(const Vec3& pol_dir, const Vec3& b_dir);

struct Antinode {
  Vec3 position;   // within [0, lambda)^3
  double intensity;
  Vec3 pol_dir;    // unit vector, sign-normalized (first nonzero component > 0)
};

struct AntinodeSurvey {
  std::vector<Antinode> antinodes; // sorted lexicographically by position
  bool mot00;                      // count-8 guarantee only when true
};

// Grid scan over one cubic unit cell of side lambda followed by local ascent
// refinement; maxima closer than lambda/100 are merged.
// Throws std::invalid_argument for resolution < 32.
AntinodeSurvey find_antinodes(const FieldConfig& cfg, int resolution = 48);

// Light-shift parameter: Lambda = (hbar |delta| / 2) * s_peak with
// s_peak = (I_peak/I_0) / (1 + (2 delta/Gamma)^2). Returns Joules.
// Throws std::domain_error for gamma <= 0 or negative s_peak.
double light_shift_param(double s_peak, double delta, double gamma);

// Saturation parameter for a given local intensity (single-beam units times
// beam intensity already folded in) at detuning delta.
double saturation_parameter(double local_intensity, double delta, double gamma);

} // namespace motcorr
