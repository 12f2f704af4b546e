#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "motcorr/atom.hpp"
#include "motcorr/light_field.hpp"
#include "motcorr/rng.hpp"

namespace motcorr {

// Semiclassical center-of-mass motion. Temperatures are kinetic temperatures;
// ballistic motion redraws the Maxwell-Boltzmann velocity every 10 lambda of
// path length to avoid lattice-commensurate artifacts.
struct MotionModel {
  enum class Kind { Static, Ballistic, Langevin };
  Kind kind = Kind::Static;
  double temperature = 0.0; // K
  double friction = 0.0;    // 1/s (Langevin velocity damping rate)

  void validate() const;
};

struct Emission {
  double t;        // s
  int q;           // spherical index -1, 0, +1
  Vec3 quant_axis; // quantization axis at emission
  Vec3 position;   // m
};

struct EmissionRecord {
  std::vector<Emission> events; // strictly increasing t
  double duration = 0.0;        // s
};

struct TrajectoryConfig {
  AtomSpec atom;
  FieldConfig field;
  QuadrupoleField quadrupole;
  double detuning = 0.0; // rad/s (negative = red)
  MotionModel motion;
  Vec3 start_position = Vec3::Zero();
  bool jitter_start_in_cell = false; // add a seeded uniform in-cell offset
  double duration = 0.0;             // s
  double dt_factor = 0.02; // dt = dt_factor / max(Gamma, Omega_max, |delta|, ...)
  double b_threshold = 1e-7;         // T; below it the lab z axis is used
  int field_update_stride = 1;       // refresh the local field every k steps
  // Test hook: replace the MOT pattern by a constant field vector
  // (complex amplitude, single-beam units).
  std::optional<CVec3> uniform_field;

  void validate() const;
};

// Internal wave-function state over {|g,m>} + {|e,m'>}, plus the
// semiclassical position/velocity.
struct AtomState {
  Eigen::VectorXcd psi;
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double t = 0.0;
};

struct TrajectoryOutputs {
  EmissionRecord record;
  // (t, <m>) sampled at a fixed cadence when requested
  std::vector<std::pair<double, double>> orientation;
  // <m> evaluated just before each jump
  std::vector<double> orientation_at_emissions;
};

// First-order Euler-Maruyama MCWF integrator with a per-step jump decision.
class TrajectorySimulator {
 public:
  explicit TrajectorySimulator(TrajectoryConfig cfg);

  const TrajectoryConfig& config() const { return cfg_; }
  const CouplingTable& couplings() const { return table_; }
  double time_step() const { return dt_; }

  EmissionRecord run(std::uint64_t seed) const;
  // orientation_dt > 0 also samples the <m> time series at that cadence.
  TrajectoryOutputs run_full(std::uint64_t seed, double orientation_dt = 0.0) const;

  // Building blocks exposed for tests.
  AtomState make_initial(std::uint64_t seed) const;
  // (H_eff / hbar) psi for the local field at state.r (non-Hermitian).
  Eigen::VectorXcd apply_effective_hamiltonian(const AtomState& state) const;
  // ||C_q psi||^2 for q = -1, 0, +1.
  std::array<double, 3> jump_weights(const AtomState& state) const;

  double excited_population(const AtomState& state) const;
  double mean_m(const AtomState& state) const;
  Vec3 quantization_axis(const Vec3& r) const;

 private:
  struct LocalField;
  LocalField local_field(const Vec3& r) const;

  TrajectoryConfig cfg_;
  CouplingTable table_;
  double dt_;
};

// Runs n independent trajectories with derived per-index seeds.
// Deterministic output order regardless of worker count.
std::vector<EmissionRecord> run_ensemble(const TrajectoryConfig& cfg, int n,
                                         std::uint64_t base_seed,
                                         int workers = 0);

// MOTCORR_WORKERS override, else hardware concurrency.
int default_worker_count();

// Time series of <m> from a single trajectory (diagnostic).
std::vector<std::pair<double, double>> orientation_series(
    const TrajectoryConfig& cfg, std::uint64_t seed, double sample_dt);

} // namespace motcorr
