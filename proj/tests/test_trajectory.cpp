#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "motcorr/obe.hpp"
#include "motcorr/rng.hpp"
#include "motcorr/trajectory.hpp"

using namespace motcorr;

TEST_SUITE_BEGIN("trajectory");

namespace {

// F=0 -> F'=1 atom in a uniform pure-sigma+ field, which reduces exactly to
// the driven two-level system (|g,0> <-> |e,+1>).
TrajectoryConfig two_level_config(double rabi_over_gamma) {
  TrajectoryConfig cfg;
  cfg.atom.f_ground = 0;
  cfg.atom.f_excited = 1;
  cfg.detuning = 0.0;
  cfg.quadrupole.gradient = 0.0;
  cfg.motion.kind = MotionModel::Kind::Static;
  cfg.duration = 2.0e-6;
  cfg.dt_factor = 0.005;
  // Coupling convention: Omega = Gamma * |A_+| * amplitude_factor; a unit
  // sigma+ spherical amplitude with |E| chosen below gives Omega directly.
  CVec3 e = CVec3::Zero();
  Vec3 xq, yq, zq;
  quantization_frame(Vec3::UnitZ(), xq, yq, zq);
  e = -(xq.cast<std::complex<double>>() +
        std::complex<double>(0, 1) * yq.cast<std::complex<double>>()) /
      std::sqrt(2.0);
  // Omega_q = Gamma sqrt(|A_q|^2 / 2): scale the unit sigma+ amplitude so
  // that Omega / Gamma equals the requested ratio.
  e *= std::sqrt(2.0) * rabi_over_gamma;
  cfg.uniform_field = e;
  return cfg;
}

} // namespace

TEST_CASE("determinism: identical seeds give identical emission records") {
  auto cfg = two_level_config(2.0);
  TrajectorySimulator sim(cfg);
  const auto a = sim.run(991);
  const auto b = sim.run(991);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].t == b.events[i].t);
    CHECK(a.events[i].q == b.events[i].q);
  }
  const auto c = sim.run(992);
  CHECK(a.events.size() != c.events.size());
}

TEST_CASE("run_ensemble order is independent of worker count") {
  auto cfg = two_level_config(2.0);
  cfg.duration = 0.5e-6;
  const auto serial = run_ensemble(cfg, 8, 17, 1);
  const auto parallel = run_ensemble(cfg, 8, 17, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].events.size() == parallel[i].events.size());
    for (std::size_t k = 0; k < serial[i].events.size(); ++k)
      CHECK(serial[i].events[k].t == parallel[i].events[k].t);
  }
}

TEST_CASE("jump weights reproduce the branching ratios") {
  TrajectoryConfig cfg;
  cfg.motion.kind = MotionModel::Kind::Static;
  cfg.duration = 1e-6;
  cfg.quadrupole.gradient = 0.0;
  cfg.uniform_field = CVec3(0.5, 0.0, 0.0);
  TrajectorySimulator sim(cfg);
  AtomState st = sim.make_initial(1);
  // Put the atom fully in the stretched excited sublevel m' = F'.
  st.psi.setZero();
  st.psi[st.psi.size() - 1] = 1.0;
  const auto w = sim.jump_weights(st);
  const double total = w[0] + w[1] + w[2];
  REQUIRE(total > 0.0);
  // From m' = F' only sigma+ decay (to m = F) is open.
  CHECK(w[2] / total == doctest::Approx(1.0).epsilon(1e-12));

  // From m' = 0 (middle of the excited manifold) the branching must match
  // the coupling table.
  st.psi.setZero();
  st.psi[sim.config().atom.ground_dim() + sim.config().atom.f_excited] = 1.0;
  const auto w0 = sim.jump_weights(st);
  const double t0 = w0[0] + w0[1] + w0[2];
  const auto& table = sim.couplings();
  for (int q = -1; q <= 1; ++q)
    CHECK(w0[q + 1] / t0 == doctest::Approx(table.branching(0, q)).epsilon(1e-10));
}

TEST_CASE("excited population matches the two-level transient") {
  // Ensemble-averaged MCWF excited population against the independent
  // adaptive integration of the optical Bloch equations.
  auto cfg = two_level_config(1.5);
  cfg.duration = 1.0e-6;
  TrajectorySimulator sim(cfg);
  const double gamma = cfg.atom.gamma;

  const std::vector<double> grid = {0.3 / gamma, 1.0 / gamma, 3.0 / gamma};
  const auto oracle =
      two_level_excited_population({1.5 * gamma, 0.0, gamma}, grid);

  const int n_traj = 600;
  std::vector<double> mean(grid.size(), 0.0);
  for (int k = 0; k < n_traj; ++k) {
    AtomState st = sim.make_initial(Rng::child_seed(303, k));
    Rng rng(Rng::child_seed(909, k));
    std::size_t gi = 0;
    const double dt = sim.time_step();
    while (st.t < grid.back() + dt && gi < grid.size()) {
      // Manual MCWF stepping via the public building blocks.
      const auto dpsi = sim.apply_effective_hamiltonian(st);
      const double p_e = sim.excited_population(st);
      const double dp = gamma * dt * p_e;
      if (rng.uniform() < dp) {
        // Collapse to the ground state (only one decay channel here).
        st.psi.setZero();
        st.psi[0] = 1.0;
      } else {
        st.psi -= std::complex<double>(0, 1) * dt * dpsi;
        st.psi.normalize();
      }
      st.t += dt;
      if (st.t >= grid[gi]) {
        mean[gi] += sim.excited_population(st);
        ++gi;
      }
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    mean[i] /= n_traj;
    // Binomial-scale tolerance at 600 trajectories.
    CHECK(std::abs(mean[i] - oracle[i]) < 0.05);
  }
}

TEST_CASE("ballistic motion moves the atom; static does not") {
  TrajectoryConfig cfg;
  cfg.motion.kind = MotionModel::Kind::Ballistic;
  cfg.motion.temperature = 1.0e-4;
  cfg.duration = 1.0e-4;
  cfg.field.beam_intensity = 0.5;
  cfg.detuning = -2.0 * cfg.atom.gamma;
  TrajectorySimulator sim(cfg);
  const auto rec = sim.run(44);
  REQUIRE(rec.events.size() > 10);
  const Vec3 d = rec.events.back().position - rec.events.front().position;
  CHECK(d.norm() > 1e-6);  // microns of travel at 100 uK over 100 us

  cfg.motion.kind = MotionModel::Kind::Static;
  TrajectorySimulator sim2(cfg);
  const auto rec2 = sim2.run(44);
  REQUIRE(rec2.events.size() > 10);
  CHECK((rec2.events.back().position - rec2.events.front().position).norm() == 0.0);
}

TEST_CASE("emission times are strictly increasing") {
  auto cfg = two_level_config(2.0);
  TrajectorySimulator sim(cfg);
  const auto rec = sim.run(7);
  REQUIRE(rec.events.size() > 5);
  for (std::size_t i = 1; i < rec.events.size(); ++i)
    CHECK(rec.events[i].t > rec.events[i - 1].t);
  CHECK(rec.duration == doctest::Approx(cfg.duration));
}

TEST_CASE("config validation rejects bad values") {
  TrajectoryConfig cfg;
  cfg.duration = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.duration = 1e-3;
  cfg.dt_factor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt_factor = 0.02;
  cfg.motion.kind = MotionModel::Kind::Ballistic;
  cfg.motion.temperature = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_SUITE_END();
