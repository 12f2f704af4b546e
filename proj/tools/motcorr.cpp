// Command-line front end: simulate emission/click streams, correlate them,
// fit correlation curves, and reproduce the preset studies.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "motcorr/config.hpp"
#include "motcorr/correlator.hpp"
#include "motcorr/detection.hpp"
#include "motcorr/errors.hpp"
#include "motcorr/fitting.hpp"
#include "motcorr/rng.hpp"
#include "motcorr/stream_io.hpp"
#include "motcorr/studies.hpp"
#include "motcorr/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace motcorr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string histogram_tsv(const CorrelationHistogram& h) {
  std::ostringstream out;
  out << "# correlation histogram: " << h.channel_a << " x " << h.channel_b << "\n";
  out << "# bin_width_ns=" << h.bin_width_ns << " rate_a_hz=" << h.rate_a
      << " rate_b_hz=" << h.rate_b << " duration_s=" << h.duration_s
      << (h.single_stop ? " single_stop" : "")
      << (h.background_corrected ? " background_corrected" : "") << "\n";
  out << "# lag_s\tg2\terr\tcounts\n";
  out.precision(10);
  for (std::size_t k = 0; k < h.bins(); ++k)
    out << h.lag_s(k) << '\t' << (h.normalized ? h.g2[k] : 0.0) << '\t'
        << (h.normalized ? h.err[k] : 0.0) << '\t' << h.counts[k] << '\n';
  return out.str();
}

// Reads a whitespace-separated table, skipping '#' comments; needs >= 2
// columns (x y [err]).
CurveData read_curve(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  CurveData data;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream row(line);
    double x, y, e = 1.0;
    if (!(row >> x >> y)) throw IoError("malformed table row in " + path.string());
    row >> e;
    data.x.push_back(x);
    data.y.push_back(y);
    data.err.push_back(e > 0.0 ? e : 1.0);
  }
  if (data.x.empty()) throw IoError("empty table: " + path.string());
  return data;
}

json exp_fit_json(const ExpFit& f) {
  return json{{"contrast", f.contrast},      {"contrast_err", f.contrast_err()},
              {"tau_r_s", f.tau_r},          {"tau_r_err_s", f.tau_r_err()},
              {"baseline", f.baseline},      {"chi2", f.chi2},
              {"dof", f.dof},                {"converged", f.converged}};
}

int cmd_validate(const std::string& config_path) {
  const auto cfg = load_run_config(config_path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "ok (config hash " << std::hex << cfg.hash() << std::dec << ")\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, int segments, int workers) {
  const auto cfg = load_run_config(config_path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";

  const auto records = run_ensemble(cfg.trajectory, segments, cfg.seed, workers);
  const auto seg_ns =
      static_cast<std::uint64_t>(std::llround(cfg.trajectory.duration * 1e9));

  if (!cfg.output_truth.empty()) {
    // Segments are concatenated back to back into one truth stream.
    EmissionRecord merged;
    merged.duration = cfg.trajectory.duration * segments;
    for (int s = 0; s < segments; ++s)
      for (const auto& ev : records[s].events) {
        Emission shifted = ev;
        shifted.t += s * cfg.trajectory.duration;
        merged.events.push_back(shifted);
      }
    write_stream(cfg.output_truth, stream_from_record(merged));
    std::cout << "truth stream: " << cfg.output_truth << " ("
              << merged.events.size() << " emissions)\n";
  }

  if (!cfg.output_clicks.empty()) {
    ClickStream merged;
    AnalyzerConfig analyzer = cfg.analyzer;
    merged.labels = analyzer.channel_labels();
    merged.duration_ns = seg_ns * segments;
    for (int s = 0; s < segments; ++s) {
      const auto clicks = detect(records[s], cfg.detection, analyzer,
                                 Rng::child_seed(cfg.seed ^ 0xc11c5ULL, s));
      for (int c = 0; c < 2; ++c)
        for (auto t : clicks.channels[c])
          merged.channels[c].push_back(t + s * seg_ns);
    }
    write_stream(cfg.output_clicks, stream_from_clicks(merged));
    std::cout << "click stream: " << cfg.output_clicks << " ("
              << merged.total_clicks() << " clicks)\n";
  }
  return 0;
}

int cmd_correlate(const std::string& in_path, const std::string& out_path,
                  std::uint64_t bin_ns, std::uint64_t max_lag_ns, int chan_a,
                  int chan_b, bool auto_mode, bool single_stop,
                  double signal_frac) {
  const auto data = read_stream(in_path);
  const auto clicks = clicks_from_stream(data);
  const double duration_s = data.duration_ns * 1e-9;

  auto stream_of = [&](int c) -> const std::vector<std::uint64_t>& {
    if (c < 0 || c >= data.channel_count)
      throw ConfigError("channel index out of range: " + std::to_string(c));
    return clicks.channels[c];
  };

  CorrelationHistogram hist;
  if (auto_mode) {
    hist = multistop_auto(stream_of(chan_a), bin_ns, max_lag_ns);
    const double r = stream_of(chan_a).size() / duration_s;
    hist = normalize(std::move(hist), r, r, duration_s);
    hist.channel_a = hist.channel_b = clicks.labels[chan_a];
  } else {
    const auto& a = stream_of(chan_a);
    const auto& b = stream_of(chan_b);
    hist = single_stop ? singlestop_cross(a, b, bin_ns, max_lag_ns)
                       : multistop_cross(a, b, bin_ns, max_lag_ns);
    hist = normalize(std::move(hist), a.size() / duration_s, b.size() / duration_s,
                     duration_s);
    hist.channel_a = clicks.labels[chan_a];
    hist.channel_b = clicks.labels[chan_b];
  }
  if (signal_frac > 0.0) hist = background_correct(std::move(hist), signal_frac);

  const std::string tsv = histogram_tsv(hist);
  if (out_path.empty())
    std::cout << tsv;
  else {
    write_text(out_path, tsv);
    std::cout << "wrote " << out_path << " (" << hist.bins() << " bins)\n";
  }
  return 0;
}

int cmd_fit(const std::string& table_path, const std::string& model, double gamma,
            double tau_min, double tau_max) {
  auto data = read_curve(table_path);
  if (tau_min > 0.0 || tau_max > 0.0) {
    CurveData cut;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      if (data.x[i] < tau_min) continue;
      if (tau_max > 0.0 && data.x[i] > tau_max) continue;
      cut.x.push_back(data.x[i]);
      cut.y.push_back(data.y[i]);
      cut.err.push_back(data.err[i]);
    }
    data = std::move(cut);
  }

  json out;
  if (model == "exp") {
    out = exp_fit_json(fit_exponential(data));
    out["model"] = "exp";
  } else if (model == "rabi") {
    if (gamma <= 0.0) throw ConfigError("--gamma is required for the rabi model");
    const auto f = fit_rabi(data, gamma);
    out = json{{"model", "rabi"},       {"rabi_rad_s", f.rabi},
               {"delta_rad_s", f.delta}, {"chi2", f.chi2},
               {"converged", f.converged}, {"monotonic", f.monotonic}};
  } else if (model == "powerlaw") {
    std::vector<PowerLawPoint> pts;
    for (std::size_t i = 0; i < data.x.size(); ++i)
      pts.push_back({data.x[i], data.y[i], data.err[i]});
    const auto f = fit_power_law(pts);
    out = json{{"model", "powerlaw"},
               {"exponent", f.exponent},
               {"exponent_err", f.exponent_err},
               {"prefactor", f.prefactor},
               {"chi2", f.chi2}};
  } else {
    throw ConfigError("unknown fit model: " + model);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_reproduce(const std::string& study, const std::string& out_dir,
                  std::uint64_t seed, bool seed_given, int workers) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  json report;
  report["study"] = study;

  if (study == "antinode-survey") {
    const auto res = studies::antinode_survey();
    std::ostringstream tsv;
    tsv << "# MOT00 antinodes in the unit cell near (50, 50, 50) um\n"
        << "# x_m\ty_m\tz_m\tintensity\tpol_x\tpol_y\tpol_z\tlinearity_defect"
           "\tbeta_deg\tbistable\n";
    tsv.precision(10);
    for (const auto& r : res.rows)
      tsv << r.position.x() << '\t' << r.position.y() << '\t' << r.position.z()
          << '\t' << r.intensity << '\t' << r.pol_dir.x() << '\t' << r.pol_dir.y()
          << '\t' << r.pol_dir.z() << '\t' << r.linearity_defect << '\t'
          << r.beta_deg << '\t' << (r.bistable ? 1 : 0) << '\n';
    write_text(dir / "antinode_survey.tsv", tsv.str());
    report["antinodes"] = res.rows.size();
    report["bistable_count"] = res.bistable_count;
    std::cout << res.rows.size() << " antinodes, " << res.bistable_count
              << " bistable\n";
  } else if (study == "fig1") {
    const auto res = studies::run_fig1(seed_given ? seed : 11, 16000, workers);
    std::ostringstream tsv;
    tsv << "# antibunching + Rabi oscillation vs optical-Bloch oracle\n"
        << "# tau_s\tg2_sim\terr\tg2_oracle\n";
    tsv.precision(10);
    for (std::size_t k = 0; k < res.tau_s.size(); ++k)
      tsv << res.tau_s[k] << '\t' << res.g2_sim[k] << '\t' << res.err[k] << '\t'
          << res.g2_oracle[k] << '\n';
    write_text(dir / "fig1_g2.tsv", tsv.str());
    report["g2_zero_bin"] = res.g2_zero_bin;
    report["checkpoints"] = res.checkpoints;
    report["checkpoints_within_3se"] = res.checkpoints_within_3se;
    std::cout << "g2(0 bin) = " << res.g2_zero_bin << ", "
              << res.checkpoints_within_3se << "/" << res.checkpoints
              << " checkpoints within 3 SE\n";
  } else if (study == "fig3") {
    const auto res = studies::run_fig3(seed_given ? seed : 23, 120, workers);
    write_text(dir / "fig3_circular.tsv", histogram_tsv(res.circular_cross));
    write_text(dir / "fig3_linear.tsv", histogram_tsv(res.linear_cross));
    report["circular_fit"] = exp_fit_json(res.circular_fit);
    report["linear_fit"] = exp_fit_json(res.linear_fit);
    std::cout << "circular contrast " << res.circular_fit.contrast << ", tau_r "
              << res.circular_fit.tau_r * 1e6 << " us; linear contrast "
              << res.linear_fit.contrast << "\n";
  } else if (study == "fig4") {
    const auto res = studies::run_fig4(seed_given ? seed : 29, 160, workers);
    write_text(dir / "fig4_auto.tsv", histogram_tsv(res.total_auto));
    report["fit"] = exp_fit_json(res.fit);
    std::cout << "total-intensity contrast " << res.fit.contrast << ", tau_r "
              << res.fit.tau_r * 1e6 << " us\n";
  } else if (study == "fig5") {
    const auto res = studies::run_fig5(seed_given ? seed : 37, 100, workers);
    std::ostringstream tsv;
    tsv << "# contrast and tau_r vs atom number\n"
        << "# n\tcontrast\tcontrast_err\ttau_r_s\ttau_r_err_s\n";
    tsv.precision(10);
    for (const auto& [n, f] : res.per_n)
      tsv << n << '\t' << f.contrast << '\t' << f.contrast_err() << '\t'
          << f.tau_r << '\t' << f.tau_r_err() << '\n';
    write_text(dir / "fig5_contrast.tsv", tsv.str());
    report["slope"] = res.scaling.slope;
    report["slope_err"] = res.scaling.slope_err;
    report["tau_p_value"] = res.scaling.tau_p_value;
    std::cout << "contrast slope " << res.scaling.slope << " +- "
              << res.scaling.slope_err << ", tau_r constancy p = "
              << res.scaling.tau_p_value << "\n";
  } else if (study == "fig7") {
    const auto res = studies::run_fig7(seed_given ? seed : 41, 240, workers);
    std::ostringstream tsv;
    tsv << "# tau_r vs light-shift parameter (hbar*Gamma units)\n"
        << "# lambda\ttau_r_s\ttau_err_s\ttemperature_k\n";
    tsv.precision(10);
    for (std::size_t i = 0; i < res.points.size(); ++i)
      tsv << res.points[i].lambda << '\t' << res.points[i].tau_r << '\t'
          << res.points[i].tau_err << '\t' << res.temperatures_k[i] << '\n';
    write_text(dir / "fig7_powerlaw.tsv", tsv.str());
    report["exponent"] = res.fit.exponent;
    report["exponent_err"] = res.fit.exponent_err;
    std::cout << "power-law exponent " << res.fit.exponent << " +- "
              << res.fit.exponent_err << "\n";
  } else {
    throw ConfigError("unknown study: " + study);
  }

  report["seed"] = seed_given ? seed : 0;
  write_text(dir / (study + "_report.json"), report.dump(2) + "\n");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"photon-correlation simulator for multilevel atoms in a "
               "phase-controlled magneto-optical trap"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, model = "exp", study;
  int segments = 1, workers = 0, chan_a = 0, chan_b = 1;
  std::uint64_t bin_ns = 500, max_lag_ns = 20000, seed = 0;
  double gamma = 0.0, tau_min = 0.0, tau_max = 0.0, signal_frac = 0.0;
  bool auto_mode = false, single_stop = false;

  auto* validate = app.add_subcommand("validate-config", "parse and check a run config");
  validate->add_option("config", config_path, "JSON config file")->required();

  auto* simulate = app.add_subcommand("simulate", "run trajectories and write streams");
  simulate->add_option("config", config_path, "JSON config file")->required();
  simulate->add_option("--segments", segments, "number of trajectory segments")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--workers", workers, "worker threads (0 = auto)");

  auto* correlate = app.add_subcommand("correlate", "histogram a click stream");
  correlate->add_option("stream", in_path, "binary stream file")->required();
  correlate->add_option("-o,--output", out_path, "output TSV (default stdout)");
  correlate->add_option("--bin-ns", bin_ns, "lag bin width, ns");
  correlate->add_option("--max-lag-ns", max_lag_ns, "maximum lag, ns");
  correlate->add_option("--channel-a", chan_a, "start channel index");
  correlate->add_option("--channel-b", chan_b, "stop channel index");
  correlate->add_flag("--auto", auto_mode, "autocorrelate channel-a");
  correlate->add_flag("--single-stop", single_stop,
                      "single-stop estimator (pile-up biased)");
  correlate->add_option("--signal-fraction", signal_frac,
                        "background-correct with this signal fraction p");

  auto* fit = app.add_subcommand("fit", "fit a correlation table");
  fit->add_option("table", in_path, "TSV table (lag g2 err)")->required();
  fit->add_option("--model", model, "exp | rabi | powerlaw");
  fit->add_option("--gamma", gamma, "natural linewidth, rad/s (rabi model)");
  fit->add_option("--tau-min", tau_min, "fit window lower edge, s");
  fit->add_option("--tau-max", tau_max, "fit window upper edge, s");

  auto* reproduce = app.add_subcommand("reproduce", "run a preset study");
  reproduce
      ->add_option("study", study,
                   "fig1 | fig3 | fig4 | fig5 | fig7 | antinode-survey")
      ->required();
  reproduce->add_option("-o,--output-dir", out_path, "output directory")
      ->default_val("reproduce-out");
  auto* seed_opt = reproduce->add_option("--seed", seed, "override the preset seed");
  reproduce->add_option("--workers", workers, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (simulate->parsed()) return cmd_simulate(config_path, segments, workers);
    if (correlate->parsed())
      return cmd_correlate(in_path, out_path, bin_ns, max_lag_ns, chan_a, chan_b,
                           auto_mode, single_stop, signal_frac);
    if (fit->parsed()) return cmd_fit(in_path, model, gamma, tau_min, tau_max);
    if (reproduce->parsed())
      return cmd_reproduce(study, out_path, seed, !seed_opt->empty(), workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
