#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "motcorr/light_field.hpp"
#include "motcorr/trajectory.hpp"

namespace motcorr {

struct DetectionGeometry {
  Vec3 direction = Vec3(1.0, 1.0, 0.0).normalized(); // xy-plane, 45 deg to beams
  double solid_angle_fraction = 0.05;
  double quantum_efficiency = 0.47;
  double dark_rate = 10.0;  // Hz per detector
  double stray_rate = 0.0;  // Hz total, split by the analyzer (unpolarized)
  std::uint64_t resolution_ns = 100;
  std::uint64_t dead_time_ns = 700;

  void validate() const;
};

struct AnalyzerConfig {
  enum class Kind { Circular, Linear, None };
  Kind kind = Kind::Circular;

  // "l"/"r", "v"/"h" or "a"/"b".
  std::array<std::string, 2> channel_labels() const;
};

struct ChannelSplit {
  double p_a;
  double p_b;
  double p_escape; // 1 - p_a - p_b
};

// Detection probability of a spontaneously emitted photon of spherical
// polarization q (relative to quant_axis) through the analyzer optics.
// Includes the dipole angular factor (3/2)|eps_perp|^2, normalized so a
// full-sphere detector with unit efficiency captures everything.
ChannelSplit project_emission(int q, const Vec3& quant_axis,
                              const DetectionGeometry& geom,
                              const AnalyzerConfig& analyzer);

struct ClickStream {
  std::array<std::vector<std::uint64_t>, 2> channels; // sorted timestamps, ns
  std::array<std::string, 2> labels;
  std::uint64_t duration_ns = 0;

  std::uint64_t total_clicks() const { return channels[0].size() + channels[1].size(); }
};

// Non-paralyzable dead-time filter (earliest click wins); input must be sorted.
std::vector<std::uint64_t> dead_time_filter(const std::vector<std::uint64_t>& ts,
                                            std::uint64_t dead_ns);

// Emission records -> detector clicks: Bernoulli channel assignment via
// project_emission, dark/stray background, grid quantization, per-channel
// dead time. Multiple records are superposed on the same detectors
// (independent atoms observed simultaneously).
ClickStream detect(const std::vector<EmissionRecord>& records,
                   const DetectionGeometry& geom, const AnalyzerConfig& analyzer,
                   std::uint64_t seed);
ClickStream detect(const EmissionRecord& record, const DetectionGeometry& geom,
                   const AnalyzerConfig& analyzer, std::uint64_t seed);

// p = S / (S + B) from a calibrated background rate and the in-trap rate.
// Throws std::domain_error when total_rate <= 0 or background exceeds total.
double signal_fraction(double total_rate, double background_rate);

} // namespace motcorr
