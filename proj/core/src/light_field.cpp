#include "motcorr/light_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motcorr {

using std::complex;
namespace {
constexpr complex<double> I{0.0, 1.0};
}

double FieldConfig::amplitude() const { return std::sqrt(beam_intensity); }

bool FieldConfig::is_mot00() const { return phi == 0.0 && psi == 0.0; }

void FieldConfig::validate() const {
  if (wavenumber <= 0) throw std::invalid_argument("FieldConfig: wavenumber must be > 0");
  if (beam_intensity < 0) throw std::invalid_argument("FieldConfig: beam_intensity must be >= 0");
}

Vec3 quadrupole_b(const Vec3& r, const QuadrupoleField& q) {
  return q.gradient * Vec3(-0.5 * r.x(), -0.5 * r.y(), r.z());
}

void quantization_frame(const Vec3& axis, Vec3& x_q, Vec3& y_q, Vec3& z_q) {
  const double n = axis.norm();
  if (n < 1e-300) throw std::domain_error("quantization_frame: zero axis");
  z_q = axis / n;
  // Reference vector deterministically chosen away from z_q; Gram-Schmidt so
  // that axis = z yields the lab frame itself.
  const Vec3 ref =
      std::abs(z_q.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  x_q = (ref - z_q.dot(ref) * z_q).normalized();
  y_q = z_q.cross(x_q);
}

std::array<complex<double>, 3> spherical_decompose(const CVec3& e,
                                                   const Vec3& axis) {
  Vec3 xq, yq, zq;
  quantization_frame(axis, xq, yq, zq);
  const complex<double> ex = xq.x() * e.x() + xq.y() * e.y() + xq.z() * e.z();
  const complex<double> ey = yq.x() * e.x() + yq.y() * e.y() + yq.z() * e.z();
  const complex<double> ez = zq.x() * e.x() + zq.y() * e.y() + zq.z() * e.z();
  // A_q = epsilon_q^* . E with epsilon_{+-1} = -+(x_q +- i y_q)/sqrt(2),
  // epsilon_0 = z_q, so that E = sum_q A_q epsilon_q.
  const double s = 1.0 / std::sqrt(2.0);
  return {(ex + I * ey) * s, ez, -(ex - I * ey) * s};
}

FieldSample field_at(const Vec3& r, const FieldConfig& cfg, const Vec3& axis) {
  cfg.validate();
  const double k = cfg.wavenumber;
  const complex<double> ephi = std::exp(I * cfg.phi);
  const complex<double> epsi = std::exp(I * cfg.psi);
  const double kx = k * r.x(), ky = k * r.y(), kz = k * r.z();
  CVec3 e;
  e.x() = std::sin(kz) + std::sin(ky) * epsi;
  e.y() = std::cos(kz) + std::cos(kx) * ephi;
  e.z() = std::sin(kx) * ephi + std::cos(ky) * epsi;
  e *= cfg.amplitude();

  FieldSample s;
  s.e = e;
  s.intensity = e.squaredNorm();
  s.quant_axis = axis.normalized();
  s.spherical = spherical_decompose(e, axis);
  // Im(E* x E) vanishes iff the polarization is linear (no handedness).
  const CVec3 cross = e.conjugate().cross(e);
  s.linearity_defect =
      Vec3(cross.x().imag(), cross.y().imag(), cross.z().imag()).norm();
  return s;
}

BistabilityResult bistability_check(const Vec3& pol_dir, const Vec3& b_dir) {
  const double np = pol_dir.norm(), nb = b_dir.norm();
  if (np < 1e-300 || nb < 1e-300)
    throw std::domain_error("bistability_check: zero vector");
  double c = pol_dir.dot(b_dir) / (np * nb);
  c = std::clamp(c, -1.0, 1.0);
  const double beta = std::acos(c) * 180.0 / constants::pi;
  return {beta, std::abs(90.0 - beta) < 45.0};
}

namespace {

double intensity_at(const Vec3& r, const FieldConfig& cfg) {
  return field_at(r, cfg).intensity;
}

// Deterministic compass-search ascent on the intensity, periodic domain.
Vec3 refine_maximum(Vec3 r, const FieldConfig& cfg, double step) {
  double best = intensity_at(r, cfg);
  while (step > 1e-13 / cfg.wavenumber) {
    bool improved = false;
    for (int ax = 0; ax < 3; ++ax) {
      for (double sgn : {+1.0, -1.0}) {
        Vec3 cand = r;
        cand[ax] += sgn * step;
        const double v = intensity_at(cand, cfg);
        if (v > best) {
          best = v;
          r = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return r;
}

double periodic_dist(const Vec3& a, const Vec3& b, double period) {
  Vec3 d = a - b;
  for (int i = 0; i < 3; ++i) {
    d[i] = std::remainder(d[i], period);
  }
  return d.norm();
}

} // namespace

AntinodeSurvey find_antinodes(const FieldConfig& cfg, int resolution) {
  cfg.validate();
  if (resolution < 32)
    throw std::invalid_argument("find_antinodes: resolution must be >= 32 points per wavelength");
  const double lambda = 2.0 * constants::pi / cfg.wavenumber;
  const int n = resolution;
  const double h = lambda / n;

  AntinodeSurvey survey;
  survey.mot00 = cfg.is_mot00();
  if (cfg.beam_intensity == 0.0) return survey;

  std::vector<double> grid(static_cast<std::size_t>(n) * n * n);
  auto at = [&](int i, int j, int k) -> double& {
    return grid[(static_cast<std::size_t>(i) * n + j) * n + k];
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        at(i, j, k) = intensity_at(Vec3(i * h, j * h, k * h), cfg);

  std::vector<Vec3> maxima;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double v = at(i, j, k);
        if (v <= 0) continue;
        bool is_max = true;
        for (int di = -1; di <= 1 && is_max; ++di)
          for (int dj = -1; dj <= 1 && is_max; ++dj)
            for (int dk = -1; dk <= 1 && is_max; ++dk) {
              if (!di && !dj && !dk) continue;
              if (at((i + di + n) % n, (j + dj + n) % n, (k + dk + n) % n) > v)
                is_max = false;
            }
        if (is_max) maxima.push_back(Vec3(i * h, j * h, k * h));
      }

  std::vector<Antinode> out;
  for (const Vec3& m : maxima) {
    Vec3 r = refine_maximum(m, cfg, h);
    for (int i = 0; i < 3; ++i) {
      r[i] = std::fmod(r[i], lambda);
      if (r[i] < 0) r[i] += lambda;
    }
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Antinode& a) {
      return periodic_dist(a.position, r, lambda) < lambda / 100.0;
    });
    if (dup) continue;
    const FieldSample s = field_at(r, cfg);
    // Direction of the (locally linear) polarization: strip the global phase
    // of the dominant component and take the real part.
    int dom = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(s.e[i]) > std::abs(s.e[dom])) dom = i;
    const complex<double> phase =
        std::abs(s.e[dom]) > 0 ? s.e[dom] / std::abs(s.e[dom]) : complex<double>(1, 0);
    Vec3 dir(std::real(s.e.x() / phase), std::real(s.e.y() / phase),
             std::real(s.e.z() / phase));
    if (dir.norm() > 0) dir.normalize();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(dir[i]) > 1e-9) {
        if (dir[i] < 0) dir = -dir;
        break;
      }
    }
    out.push_back({r, s.intensity, dir});
  }

  std::sort(out.begin(), out.end(), [](const Antinode& a, const Antinode& b) {
    return std::lexicographical_compare(a.position.data(), a.position.data() + 3,
                                        b.position.data(), b.position.data() + 3);
  });
  survey.antinodes = std::move(out);
  return survey;
}

double saturation_parameter(double local_intensity, double delta, double gamma) {
  if (gamma <= 0) throw std::domain_error("saturation_parameter: gamma must be > 0");
  if (local_intensity < 0)
    throw std::domain_error("saturation_parameter: negative intensity");
  const double d = 2.0 * delta / gamma;
  return local_intensity / (1.0 + d * d);
}

double light_shift_param(double s_peak, double delta, double gamma) {
  if (gamma <= 0) throw std::domain_error("light_shift_param: gamma must be > 0");
  if (s_peak < 0) throw std::domain_error("light_shift_param: s_peak must be >= 0");
  return 0.5 * constants::hbar * std::abs(delta) * s_peak;
}

} // namespace motcorr
