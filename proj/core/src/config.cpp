#include "motcorr/config.hpp"

#include <zlib.h>

#include <fstream>
#include <set>

#include "motcorr/constants.hpp"
#include "motcorr/errors.hpp"

namespace motcorr {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section,
                    const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + section + "." + key + "'");
  }
}

double get_number(const json& j, const std::string& section, const std::string& key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError("config field '" + section + "." + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& section, const std::string& key,
            int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError("config field '" + section + "." + key + "' must be an integer");
  return j[key].get<int>();
}

bool get_bool(const json& j, const std::string& section, const std::string& key,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean())
    throw ConfigError("config field '" + section + "." + key + "' must be a boolean");
  return j[key].get<bool>();
}

Vec3 get_vec3(const json& j, const std::string& section, const std::string& key,
              const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    throw ConfigError("config field '" + section + "." + key +
                      "' must be an array of 3 numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

} // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j, "<root>",
                 {"atom", "field", "quadrupole", "detection", "analyzer", "motion", "run"});

  RunConfig cfg;
  auto& traj = cfg.trajectory;

  if (j.contains("atom")) {
    const json& a = j["atom"];
    reject_unknown(a, "atom",
                   {"f_ground", "f_excited", "linewidth_hz", "wavelength_m", "mass_kg",
                    "sat_intensity_w_m2", "g_factor_ground", "g_factor_excited"});
    auto& atom = traj.atom;
    atom.f_ground = get_int(a, "atom", "f_ground", atom.f_ground);
    atom.f_excited = get_int(a, "atom", "f_excited", atom.f_ground + 1);
    atom.gamma = 2.0 * constants::pi *
                 get_number(a, "atom", "linewidth_hz", atom.gamma / (2.0 * constants::pi));
    atom.wavelength = get_number(a, "atom", "wavelength_m", atom.wavelength);
    atom.mass = get_number(a, "atom", "mass_kg", atom.mass);
    atom.sat_intensity = get_number(a, "atom", "sat_intensity_w_m2", atom.sat_intensity);
    atom.g_factor_ground = get_number(a, "atom", "g_factor_ground", atom.g_factor_ground);
    atom.g_factor_excited = get_number(a, "atom", "g_factor_excited", atom.g_factor_excited);
  }

  double detuning_gamma = -2.7;
  if (j.contains("field")) {
    const json& f = j["field"];
    reject_unknown(f, "field", {"phi_rad", "psi_rad", "intensity_per_beam", "detuning_gamma"});
    traj.field.phi = get_number(f, "field", "phi_rad", 0.0);
    traj.field.psi = get_number(f, "field", "psi_rad", 0.0);
    traj.field.beam_intensity = get_number(f, "field", "intensity_per_beam", 1.0);
    detuning_gamma = get_number(f, "field", "detuning_gamma", detuning_gamma);
  }
  traj.field.wavenumber = 2.0 * constants::pi / traj.atom.wavelength;
  traj.detuning = detuning_gamma * traj.atom.gamma;

  if (j.contains("quadrupole")) {
    const json& q = j["quadrupole"];
    reject_unknown(q, "quadrupole", {"axial_gradient_t_per_m"});
    traj.quadrupole.gradient =
        get_number(q, "quadrupole", "axial_gradient_t_per_m", traj.quadrupole.gradient);
  }

  if (j.contains("detection")) {
    const json& d = j["detection"];
    reject_unknown(d, "detection",
                   {"direction", "solid_angle_fraction", "quantum_efficiency",
                    "dark_rate_hz", "stray_rate_hz", "resolution_ns", "dead_time_ns"});
    auto& det = cfg.detection;
    det.direction = get_vec3(d, "detection", "direction", det.direction);
    det.solid_angle_fraction =
        get_number(d, "detection", "solid_angle_fraction", det.solid_angle_fraction);
    det.quantum_efficiency =
        get_number(d, "detection", "quantum_efficiency", det.quantum_efficiency);
    det.dark_rate = get_number(d, "detection", "dark_rate_hz", det.dark_rate);
    det.stray_rate = get_number(d, "detection", "stray_rate_hz", det.stray_rate);
    det.resolution_ns = static_cast<std::uint64_t>(
        get_number(d, "detection", "resolution_ns", static_cast<double>(det.resolution_ns)));
    det.dead_time_ns = static_cast<std::uint64_t>(
        get_number(d, "detection", "dead_time_ns", static_cast<double>(det.dead_time_ns)));
  }

  if (j.contains("analyzer")) {
    const json& a = j["analyzer"];
    reject_unknown(a, "analyzer", {"variant"});
    if (a.contains("variant")) {
      if (!a["variant"].is_string())
        throw ConfigError("config field 'analyzer.variant' must be a string");
      const std::string v = a["variant"].get<std::string>();
      if (v == "circular") cfg.analyzer.kind = AnalyzerConfig::Kind::Circular;
      else if (v == "linear") cfg.analyzer.kind = AnalyzerConfig::Kind::Linear;
      else if (v == "none") cfg.analyzer.kind = AnalyzerConfig::Kind::None;
      else throw ConfigError("analyzer.variant must be one of circular|linear|none");
    }
  }

  if (j.contains("motion")) {
    const json& m = j["motion"];
    reject_unknown(m, "motion",
                   {"model", "temperature_k", "friction_hz", "start_position_m",
                    "jitter_start_in_cell"});
    if (m.contains("model")) {
      if (!m["model"].is_string())
        throw ConfigError("config field 'motion.model' must be a string");
      const std::string v = m["model"].get<std::string>();
      if (v == "static") traj.motion.kind = MotionModel::Kind::Static;
      else if (v == "ballistic") traj.motion.kind = MotionModel::Kind::Ballistic;
      else if (v == "langevin") traj.motion.kind = MotionModel::Kind::Langevin;
      else throw ConfigError("motion.model must be one of static|ballistic|langevin");
    }
    traj.motion.temperature = get_number(m, "motion", "temperature_k", 0.0);
    traj.motion.friction = get_number(m, "motion", "friction_hz", 0.0);
    traj.start_position = get_vec3(m, "motion", "start_position_m", Vec3::Zero());
    traj.jitter_start_in_cell = get_bool(m, "motion", "jitter_start_in_cell", false);
  }

  if (!j.contains("run")) throw ConfigError("missing required section 'run'");
  const json& r = j["run"];
  reject_unknown(r, "run",
                 {"duration_s", "seed", "dt_factor", "field_update_stride",
                  "b_threshold_t", "output_truth", "output_clicks"});
  if (!r.contains("seed"))
    throw ConfigError("run.seed is mandatory for stochastic stages");
  if (!(r["seed"].is_number_unsigned() ||
        (r["seed"].is_number_integer() && r["seed"].get<std::int64_t>() >= 0)))
    throw ConfigError("config field 'run.seed' must be a non-negative integer");
  cfg.seed = r["seed"].get<std::uint64_t>();
  cfg.seed_set = true;
  traj.duration = get_number(r, "run", "duration_s", 0.0);
  if (traj.duration <= 0)
    throw ConfigError("config field 'run.duration_s' must be > 0");
  traj.dt_factor = get_number(r, "run", "dt_factor", traj.dt_factor);
  traj.field_update_stride = get_int(r, "run", "field_update_stride", 1);
  traj.b_threshold = get_number(r, "run", "b_threshold_t", traj.b_threshold);
  if (r.contains("output_truth")) cfg.output_truth = r["output_truth"].get<std::string>();
  if (r.contains("output_clicks")) cfg.output_clicks = r["output_clicks"].get<std::string>();

  // Module-level validation, re-raised with a config-error category.
  try {
    traj.validate();
    cfg.detection.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  // Envelope warnings from the parameter range the experiment explored.
  if (traj.field.beam_intensity < 0.3 || traj.field.beam_intensity > 3.6)
    cfg.warnings.push_back("field.intensity_per_beam outside explored envelope [0.3, 3.6] I_0");
  if (detuning_gamma < -5.2 || detuning_gamma > -1.1)
    cfg.warnings.push_back("field.detuning_gamma outside explored envelope [-5.2, -1.1]");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_run_config(j);
}

json RunConfig::to_json() const {
  const auto& t = trajectory;
  json j;
  j["atom"] = {{"f_ground", t.atom.f_ground},
               {"f_excited", t.atom.f_excited},
               {"linewidth_hz", t.atom.gamma / (2.0 * constants::pi)},
               {"wavelength_m", t.atom.wavelength},
               {"mass_kg", t.atom.mass},
               {"sat_intensity_w_m2", t.atom.sat_intensity},
               {"g_factor_ground", t.atom.g_factor_ground},
               {"g_factor_excited", t.atom.g_factor_excited}};
  j["field"] = {{"phi_rad", t.field.phi},
                {"psi_rad", t.field.psi},
                {"intensity_per_beam", t.field.beam_intensity},
                {"detuning_gamma", t.detuning / t.atom.gamma}};
  j["quadrupole"] = {{"axial_gradient_t_per_m", t.quadrupole.gradient}};
  j["detection"] = {{"direction", {detection.direction.x(), detection.direction.y(),
                                   detection.direction.z()}},
                    {"solid_angle_fraction", detection.solid_angle_fraction},
                    {"quantum_efficiency", detection.quantum_efficiency},
                    {"dark_rate_hz", detection.dark_rate},
                    {"stray_rate_hz", detection.stray_rate},
                    {"resolution_ns", detection.resolution_ns},
                    {"dead_time_ns", detection.dead_time_ns}};
  const char* variant = analyzer.kind == AnalyzerConfig::Kind::Circular ? "circular"
                        : analyzer.kind == AnalyzerConfig::Kind::Linear ? "linear"
                                                                        : "none";
  j["analyzer"] = {{"variant", variant}};
  const char* model = t.motion.kind == MotionModel::Kind::Static        ? "static"
                      : t.motion.kind == MotionModel::Kind::Ballistic   ? "ballistic"
                                                                        : "langevin";
  j["motion"] = {{"model", model},
                 {"temperature_k", t.motion.temperature},
                 {"friction_hz", t.motion.friction},
                 {"start_position_m",
                  {t.start_position.x(), t.start_position.y(), t.start_position.z()}},
                 {"jitter_start_in_cell", t.jitter_start_in_cell}};
  j["run"] = {{"duration_s", t.duration},
              {"seed", seed},
              {"dt_factor", t.dt_factor},
              {"field_update_stride", t.field_update_stride},
              {"b_threshold_t", t.b_threshold},
              {"output_truth", output_truth},
              {"output_clicks", output_clicks}};
  return j;
}

std::uint32_t RunConfig::hash() const {
  const std::string canonical = to_json().dump();
  return static_cast<std::uint32_t>(
      ::crc32(0, reinterpret_cast<const Bytef*>(canonical.data()),
              static_cast<uInt>(canonical.size())));
}

} // namespace motcorr
