#include "motcorr/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motcorr/rng.hpp"

namespace motcorr {

using std::complex;
namespace {
constexpr complex<double> I{0.0, 1.0};
}

void DetectionGeometry::validate() const {
  if (direction.norm() < 1e-300)
    throw std::invalid_argument("DetectionGeometry: zero detection direction");
  if (solid_angle_fraction < 0 || solid_angle_fraction > 1)
    throw std::invalid_argument("DetectionGeometry: solid_angle_fraction outside [0,1]");
  if (quantum_efficiency < 0 || quantum_efficiency > 1)
    throw std::invalid_argument("DetectionGeometry: quantum_efficiency outside [0,1]");
  if (dark_rate < 0 || stray_rate < 0)
    throw std::invalid_argument("DetectionGeometry: negative background rate");
  if (resolution_ns == 0)
    throw std::invalid_argument("DetectionGeometry: resolution_ns must be >= 1");
}

std::array<std::string, 2> AnalyzerConfig::channel_labels() const {
  switch (kind) {
    case Kind::Circular: return {"l", "r"};
    case Kind::Linear: return {"v", "h"};
    default: return {"a", "b"};
  }
}

ChannelSplit project_emission(int q, const Vec3& quant_axis,
                              const DetectionGeometry& geom,
                              const AnalyzerConfig& analyzer) {
  if (q < -1 || q > 1) throw std::domain_error("project_emission: q outside {-1,0,+1}");
  geom.validate();

  // Emission polarization vector in the lab frame.
  Vec3 xq, yq, zq;
  quantization_frame(quant_axis, xq, yq, zq);
  CVec3 eps;
  switch (q) {
    case +1:
      eps = -(xq.cast<complex<double>>() + I * yq.cast<complex<double>>()) / std::sqrt(2.0);
      break;
    case -1:
      eps = (xq.cast<complex<double>>() - I * yq.cast<complex<double>>()) / std::sqrt(2.0);
      break;
    default:
      eps = zq.cast<complex<double>>();
  }

  const Vec3 k = geom.direction.normalized();
  const CVec3 kc = k.cast<complex<double>>();
  // Transverse projection; dipole angular weight (3/2)|eps_perp|^2 averages
  // to 1 over the full sphere.
  CVec3 eps_perp = eps - (kc.x() * eps.x() + kc.y() * eps.y() + kc.z() * eps.z()) * kc;
  const double trans2 = eps_perp.squaredNorm();
  double p_det = geom.solid_angle_fraction * geom.quantum_efficiency * 1.5 * trans2;
  p_det = std::min(p_det, 1.0); // geometric boost cannot exceed certainty

  ChannelSplit split{0.0, 0.0, 1.0};
  if (trans2 < 1e-30 || p_det <= 0.0) return split;

  // Analyzer basis in the detection transverse plane.
  Vec3 e1, e2, kz;
  quantization_frame(k, e1, e2, kz);
  const CVec3 a = eps_perp / std::sqrt(trans2);
  const complex<double> a1 = e1.x() * a.x() + e1.y() * a.y() + e1.z() * a.z();
  const complex<double> a2 = e2.x() * a.x() + e2.y() * a.y() + e2.z() * a.z();
  double w_a = 0.5, w_b = 0.5;
  switch (analyzer.kind) {
    case AnalyzerConfig::Kind::Circular: {
      // left/right circular about the detection direction
      w_a = 0.5 * std::norm(a1 - I * a2);
      w_b = 0.5 * std::norm(a1 + I * a2);
      break;
    }
    case AnalyzerConfig::Kind::Linear: {
      w_a = std::norm(a2); // "v"
      w_b = std::norm(a1); // "h"
      break;
    }
    case AnalyzerConfig::Kind::None:
      break;
  }
  split.p_a = p_det * w_a;
  split.p_b = p_det * w_b;
  split.p_escape = 1.0 - split.p_a - split.p_b;
  return split;
}

std::vector<std::uint64_t> dead_time_filter(const std::vector<std::uint64_t>& ts,
                                            std::uint64_t dead_ns) {
  std::vector<std::uint64_t> out;
  out.reserve(ts.size());
  bool first = true;
  std::uint64_t last = 0;
  for (std::uint64_t t : ts) {
    if (first || t >= last + dead_ns) {
      out.push_back(t);
      last = t;
      first = false;
    }
  }
  return out;
}

ClickStream detect(const std::vector<EmissionRecord>& records,
                   const DetectionGeometry& geom, const AnalyzerConfig& analyzer,
                   std::uint64_t seed) {
  geom.validate();
  double duration = 0.0;
  for (const auto& r : records) duration = std::max(duration, r.duration);

  Rng rng(Rng::child_seed(seed, 0xde7ec7));
  std::array<std::vector<std::uint64_t>, 2> raw;

  // True emissions, merged over records in time order.
  std::vector<const Emission*> all;
  for (const auto& r : records)
    for (const auto& e : r.events) all.push_back(&e);
  std::sort(all.begin(), all.end(),
            [](const Emission* a, const Emission* b) { return a->t < b->t; });

  for (const Emission* e : all) {
    const ChannelSplit split = project_emission(e->q, e->quant_axis, geom, analyzer);
    const double u = rng.uniform();
    int ch = -1;
    if (u < split.p_a) ch = 0;
    else if (u < split.p_a + split.p_b) ch = 1;
    if (ch >= 0)
      raw[ch].push_back(static_cast<std::uint64_t>(e->t * 1e9));
  }

  // Dark counts: each detector has its own Poisson process. Stray light is
  // unpolarized and splits 50/50 at the analyzer.
  const double half_stray = 0.5 * geom.stray_rate;
  for (int ch = 0; ch < 2; ++ch) {
    const double rate = geom.dark_rate + half_stray;
    if (rate > 0 && duration > 0) {
      double t = rng.exponential() / rate;
      while (t < duration) {
        raw[ch].push_back(static_cast<std::uint64_t>(t * 1e9));
        t += rng.exponential() / rate;
      }
    }
  }

  ClickStream out;
  out.labels = analyzer.channel_labels();
  out.duration_ns = static_cast<std::uint64_t>(duration * 1e9);
  for (int ch = 0; ch < 2; ++ch) {
    auto& v = raw[ch];
    std::sort(v.begin(), v.end());
    for (auto& t : v) t = (t / geom.resolution_ns) * geom.resolution_ns;
    out.channels[ch] = geom.dead_time_ns > 0 ? dead_time_filter(v, geom.dead_time_ns)
                                             : std::move(v);
  }
  return out;
}

ClickStream detect(const EmissionRecord& record, const DetectionGeometry& geom,
                   const AnalyzerConfig& analyzer, std::uint64_t seed) {
  return detect(std::vector<EmissionRecord>{record}, geom, analyzer, seed);
}

double signal_fraction(double total_rate, double background_rate) {
  if (total_rate <= 0) throw std::domain_error("signal_fraction: total rate must be > 0");
  if (background_rate < 0 || background_rate > total_rate)
    throw std::domain_error("signal_fraction: background rate outside [0, total]");
  return (total_rate - background_rate) / total_rate;
}

} // namespace motcorr
