#include "motcorr/trajectory.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "motcorr/constants.hpp"
#include "motcorr/errors.hpp"

namespace motcorr {

using std::complex;
namespace {
constexpr complex<double> I{0.0, 1.0};
constexpr double kSqrt2Inv = 0.70710678118654752440;
}

void MotionModel::validate() const {
  if (temperature < 0) throw std::invalid_argument("MotionModel: temperature must be >= 0");
  if (kind == Kind::Langevin && friction <= 0)
    throw std::invalid_argument("MotionModel: Langevin motion needs friction > 0");
}

void TrajectoryConfig::validate() const {
  atom.validate();
  field.validate();
  motion.validate();
  if (duration < 0) throw std::invalid_argument("TrajectoryConfig: duration must be >= 0");
  if (dt_factor <= 0 || dt_factor > 0.05)
    throw std::invalid_argument("TrajectoryConfig: dt_factor must be in (0, 0.05]");
  if (field_update_stride < 1)
    throw std::invalid_argument("TrajectoryConfig: field_update_stride must be >= 1");
}

struct TrajectorySimulator::LocalField {
  std::array<complex<double>, 3> rabi; // Omega_q / Gamma (complex), q=-1,0,+1
  Vec3 axis;
  double zeeman_g; // rad/s per unit m
  double zeeman_e;
};

TrajectorySimulator::TrajectorySimulator(TrajectoryConfig cfg)
    : cfg_(std::move(cfg)), table_(cfg_.atom.f_ground, cfg_.atom.f_excited) {
  cfg_.validate();
  const double gamma = cfg_.atom.gamma;
  // Upper bound on the local Rabi frequency: each Cartesian component of the
  // pattern has amplitude <= 2, so |E|^2 <= 12 I_beam.
  double s_max = 12.0 * cfg_.field.beam_intensity;
  if (cfg_.uniform_field) s_max = cfg_.uniform_field->squaredNorm();
  const double omega_max = gamma * std::sqrt(std::max(s_max, 1e-12) / 2.0);
  const double scale = std::max({gamma, omega_max, std::abs(cfg_.detuning)});
  dt_ = cfg_.dt_factor / scale;
}

Vec3 TrajectorySimulator::quantization_axis(const Vec3& r) const {
  const Vec3 b = quadrupole_b(r, cfg_.quadrupole);
  const double bn = b.norm();
  if (bn > cfg_.b_threshold) return b / bn;
  return Vec3::UnitZ();
}

TrajectorySimulator::LocalField TrajectorySimulator::local_field(const Vec3& r) const {
  LocalField lf;
  const Vec3 b = quadrupole_b(r, cfg_.quadrupole);
  const double bn = b.norm();
  lf.axis = bn > cfg_.b_threshold ? Vec3(b / bn) : Vec3::UnitZ();

  std::array<complex<double>, 3> amps;
  if (cfg_.uniform_field) {
    amps = spherical_decompose(*cfg_.uniform_field, lf.axis);
  } else {
    amps = field_at(r, cfg_.field, lf.axis).spherical;
  }
  // Omega_q = Gamma sqrt(s_q/2) with s_q = |A_q|^2 in I_0 units.
  for (int i = 0; i < 3; ++i) lf.rabi[i] = amps[i] * kSqrt2Inv;

  const double larmor = constants::bohr_magneton * bn / constants::hbar;
  lf.zeeman_g = cfg_.atom.g_factor_ground * larmor;
  lf.zeeman_e = cfg_.atom.g_factor_excited * larmor;
  return lf;
}

AtomState TrajectorySimulator::make_initial(std::uint64_t seed) const {
  Rng rng(Rng::child_seed(seed, 0xa70a));
  AtomState st;
  st.psi = Eigen::VectorXcd::Zero(cfg_.atom.dim());
  // Sample from the symmetric ground-manifold mixture.
  const int fg = cfg_.atom.f_ground;
  const int m = fg == 0 ? 0 : static_cast<int>(rng.uniform() * (2 * fg + 1)) - fg;
  st.psi[m + fg] = 1.0;
  st.r = cfg_.start_position;
  if (cfg_.jitter_start_in_cell) {
    const double lambda = 2.0 * constants::pi / cfg_.field.wavenumber;
    st.r += Vec3(rng.uniform() * lambda, rng.uniform() * lambda, rng.uniform() * lambda);
  }
  const double sigma_v =
      std::sqrt(constants::k_boltzmann * cfg_.motion.temperature / cfg_.atom.mass);
  if (cfg_.motion.kind != MotionModel::Kind::Static && sigma_v > 0) {
    st.v = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * sigma_v;
  }
  st.t = 0.0;
  return st;
}

Eigen::VectorXcd TrajectorySimulator::apply_effective_hamiltonian(
    const AtomState& state) const {
  const LocalField lf = local_field(state.r);
  const int fg = cfg_.atom.f_ground;
  const int fe = cfg_.atom.f_excited;
  const int gd = 2 * fg + 1;
  const double gamma = cfg_.atom.gamma;
  const double delta = cfg_.detuning;

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(state.psi.size());
  for (int m = -fg; m <= fg; ++m)
    out[m + fg] = lf.zeeman_g * m * state.psi[m + fg];
  for (int me = -fe; me <= fe; ++me)
    out[gd + me + fe] =
        (complex<double>(-delta + lf.zeeman_e * me, -0.5 * gamma)) *
        state.psi[gd + me + fe];
  for (int m = -fg; m <= fg; ++m) {
    for (int q = -1; q <= 1; ++q) {
      const int me = m + q;
      if (std::abs(me) > fe) continue;
      const double c = table_.amplitude(m, q);
      if (c == 0.0) continue;
      const complex<double> half_rabi =
          0.5 * cfg_.atom.gamma * lf.rabi[q + 1] * c;
      out[gd + me + fe] += half_rabi * state.psi[m + fg];
      out[m + fg] += std::conj(half_rabi) * state.psi[gd + me + fe];
    }
  }
  return out;
}

double TrajectorySimulator::excited_population(const AtomState& state) const {
  const int gd = cfg_.atom.ground_dim();
  double p = 0.0;
  for (int i = gd; i < state.psi.size(); ++i) p += std::norm(state.psi[i]);
  const double n = state.psi.squaredNorm();
  return n > 0 ? p / n : 0.0;
}

double TrajectorySimulator::mean_m(const AtomState& state) const {
  const int fg = cfg_.atom.f_ground;
  const int fe = cfg_.atom.f_excited;
  const int gd = 2 * fg + 1;
  double m_sum = 0.0;
  for (int m = -fg; m <= fg; ++m) m_sum += m * std::norm(state.psi[m + fg]);
  for (int me = -fe; me <= fe; ++me)
    m_sum += me * std::norm(state.psi[gd + me + fe]);
  const double n = state.psi.squaredNorm();
  return n > 0 ? m_sum / n : 0.0;
}

std::array<double, 3> TrajectorySimulator::jump_weights(const AtomState& state) const {
  const int fg = cfg_.atom.f_ground;
  const int fe = cfg_.atom.f_excited;
  const int gd = 2 * fg + 1;
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int me = -fe; me <= fe; ++me) {
    const double pop = std::norm(state.psi[gd + me + fe]);
    if (pop == 0.0) continue;
    for (int q = -1; q <= 1; ++q)
      w[q + 1] += table_.branching(me, q) * pop;
  }
  return w;
}

EmissionRecord TrajectorySimulator::run(std::uint64_t seed) const {
  return run_full(seed).record;
}

TrajectoryOutputs TrajectorySimulator::run_full(std::uint64_t seed,
                                                double orientation_dt) const {
  TrajectoryOutputs out;
  out.record.duration = cfg_.duration;
  if (cfg_.duration <= 0) return out;

  Rng rng(Rng::child_seed(seed, 0x51));
  AtomState st = make_initial(seed);

  const int fg = cfg_.atom.f_ground;
  const int fe = cfg_.atom.f_excited;
  const int gd = 2 * fg + 1;
  const int dim = cfg_.atom.dim();
  const double gamma = cfg_.atom.gamma;
  const double delta = cfg_.detuning;
  const double dt = dt_;
  const double lambda = 2.0 * constants::pi / cfg_.field.wavenumber;
  const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(cfg_.duration / dt));
  const std::int64_t sample_stride =
      orientation_dt > 0 ? std::max<std::int64_t>(1, std::llround(orientation_dt / dt)) : 0;

  LocalField lf = local_field(st.r);
  Eigen::VectorXcd next(dim);

  const double sigma_v =
      std::sqrt(constants::k_boltzmann * cfg_.motion.temperature / cfg_.atom.mass);
  double ballistic_path = 0.0;
  const double redraw_path = 10.0 * lambda;

  for (std::int64_t step = 0; step < n_steps; ++step) {
    if (cfg_.field_update_stride == 1 ||
        step % cfg_.field_update_stride == 0) {
      if (cfg_.motion.kind != MotionModel::Kind::Static || step == 0)
        lf = local_field(st.r);
    }

    // Jump decision from the (normalized) excited population.
    double p_e = 0.0;
    for (int i = gd; i < dim; ++i) p_e += std::norm(st.psi[i]);
    const double dp = gamma * dt * p_e;
    if (dp > 0.1)
      throw NumericalError("trajectory step size too large (dp > 0.1); reduce dt_factor");

    if (rng.uniform() < dp) {
      // Spontaneous emission: pick q from the branching of the current
      // excited amplitudes, project to the ground manifold, renormalize.
      std::array<double, 3> w{0, 0, 0};
      for (int me = -fe; me <= fe; ++me) {
        const double pop = std::norm(st.psi[gd + me + fe]);
        if (pop == 0.0) continue;
        for (int q = -1; q <= 1; ++q) w[q + 1] += table_.branching(me, q) * pop;
      }
      const double wsum = w[0] + w[1] + w[2];
      double u = rng.uniform() * wsum;
      int q = -1;
      for (int i = 0; i < 3; ++i) {
        if (u < w[i] || i == 2) { q = i - 1; break; }
        u -= w[i];
      }
      out.orientation_at_emissions.push_back(mean_m(st));
      next.setZero();
      for (int me = -fe; me <= fe; ++me) {
        const int m = me - q;
        if (std::abs(m) > fg) continue;
        next[m + fg] += table_.amplitude(m, q) * st.psi[gd + me + fe];
      }
      const double n = next.norm();
      if (!(n > 0))
        throw NumericalError("jump projected to a null state");
      st.psi = next / n;
      out.record.events.push_back({st.t, q, lf.axis, st.r});
    } else {
      // Non-Hermitian Euler drift, renormalized each step.
      // H/hbar: Zeeman diagonals, detuning and -i Gamma/2 on the excited
      // manifold, drive couplings weighted by the local spherical amplitudes.
      for (int m = -fg; m <= fg; ++m)
        next[m + fg] = lf.zeeman_g * m * st.psi[m + fg];
      for (int me = -fe; me <= fe; ++me)
        next[gd + me + fe] =
            complex<double>(-delta + lf.zeeman_e * me, -0.5 * gamma) *
            st.psi[gd + me + fe];
      for (int m = -fg; m <= fg; ++m) {
        for (int q = -1; q <= 1; ++q) {
          const int me = m + q;
          if (std::abs(me) > fe) continue;
          const double c = table_.amplitude(m, q);
          if (c == 0.0) continue;
          const complex<double> half_rabi = 0.5 * gamma * lf.rabi[q + 1] * c;
          next[gd + me + fe] += half_rabi * st.psi[m + fg];
          next[m + fg] += std::conj(half_rabi) * st.psi[gd + me + fe];
        }
      }
      for (int i = 0; i < dim; ++i) st.psi[i] -= I * dt * next[i];
      const double n = st.psi.norm();
      if (!std::isfinite(n) || n <= 0)
        throw NumericalError("NaN amplitudes in trajectory evolution");
      st.psi /= n;
    }

    // Kinematic motion update.
    switch (cfg_.motion.kind) {
      case MotionModel::Kind::Static:
        break;
      case MotionModel::Kind::Ballistic: {
        st.r += st.v * dt;
        ballistic_path += st.v.norm() * dt;
        if (ballistic_path >= redraw_path && sigma_v > 0) {
          st.v = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * sigma_v;
          ballistic_path = 0.0;
        }
        break;
      }
      case MotionModel::Kind::Langevin: {
        st.r += st.v * dt;
        const double g = cfg_.motion.friction;
        const double kick = std::sqrt(2.0 * g * constants::k_boltzmann *
                                      cfg_.motion.temperature / cfg_.atom.mass * dt);
        st.v += -g * st.v * dt +
                Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * kick;
        break;
      }
    }
    st.t += dt;

    if (sample_stride > 0 && step % sample_stride == 0)
      out.orientation.emplace_back(st.t, mean_m(st));
  }
  return out;
}

std::vector<EmissionRecord> run_ensemble(const TrajectoryConfig& cfg, int n,
                                         std::uint64_t base_seed, int workers) {
  if (n < 0) throw std::invalid_argument("run_ensemble: n must be >= 0");
  TrajectorySimulator sim(cfg);
  std::vector<EmissionRecord> records(n);
  if (workers <= 0) workers = default_worker_count();
  workers = std::max(1, std::min(workers, n));

  auto work = [&](int offset) {
    for (int i = offset; i < n; i += workers)
      records[i] = sim.run(Rng::child_seed(base_seed, static_cast<std::uint64_t>(i)));
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return records;
}

int default_worker_count() {
  if (const char* env = std::getenv("MOTCORR_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<std::pair<double, double>> orientation_series(
    const TrajectoryConfig& cfg, std::uint64_t seed, double sample_dt) {
  if (sample_dt <= 0)
    throw std::invalid_argument("orientation_series: sample_dt must be > 0");
  TrajectorySimulator sim(cfg);
  return sim.run_full(seed, sample_dt).orientation;
}

} // namespace motcorr
