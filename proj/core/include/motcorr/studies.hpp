#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "motcorr/correlator.hpp"
#include "motcorr/detection.hpp"
#include "motcorr/fitting.hpp"
#include "motcorr/light_field.hpp"
#include "motcorr/obe.hpp"
#include "motcorr/trajectory.hpp"

// Desk-scale reproductions of the paper-style studies. Each preset pins its
// parameters and seeds so that `reproduce` output and the acceptance suite
// are deterministic. Durations are seconds of simulated time, not the
// minutes-long experimental integrations; statistical power is recovered by
// an idealized collection solid angle where noted.
namespace motcorr::studies {

// One antinode of the survey cell with its local quadrupole-field context.
struct SurveyRow {
  Vec3 position;     // absolute, m
  double intensity;  // single-beam units
  Vec3 pol_dir;
  double linearity_defect;
  double beta_deg;
  bool bistable;
};

struct AntinodeSurveyResult {
  std::vector<SurveyRow> rows;
  int bistable_count = 0;
  bool mot00 = true;
};

// MOT00 antinodes translated into a cell centered off the quadrupole zero
// (50 um along each axis) and checked against the local B direction.
AntinodeSurveyResult antinode_survey();

// Antibunching + transient Rabi oscillations: two-level reduction (F=0 -> 1)
// against the optical-Bloch oracle.
struct Fig1Result {
  std::vector<double> tau_s;
  std::vector<double> g2_sim, err, g2_oracle;
  double g2_zero_bin = 0.0;
  int checkpoints = 0;
  int checkpoints_within_3se = 0;
  TwoLevelParams params{};
};
Fig1Result run_fig1(std::uint64_t seed = 11, int n_traj = 16000, int workers = 0);

// Ensemble of short single-atom trajectories -> click streams per segment.
struct SegmentedRun {
  std::vector<ClickStream> segments;
  std::uint64_t segment_ns = 0;
};

// Polarization-resolved cross correlations of a moving multilevel atom
// (exponential relaxation; circular strong, linear weak).
struct Fig3Result {
  CorrelationHistogram circular_cross; // l/r
  CorrelationHistogram linear_cross;   // v/h
  ExpFit circular_fit;
  ExpFit linear_fit;
};
Fig3Result run_fig3(std::uint64_t seed = 23, int n_segments = 120, int workers = 0);

// Total intensity-intensity autocorrelation of the same kind of run.
struct Fig4Result {
  CorrelationHistogram total_auto;
  ExpFit fit;
};
Fig4Result run_fig4(std::uint64_t seed = 29, int n_segments = 160, int workers = 0);

// Contrast ~ 1/N and N-independent tau_r from superposed independent atoms.
struct Fig5Result {
  std::vector<std::pair<int, ExpFit>> per_n;
  ContrastScaling scaling;
};
Fig5Result run_fig5(std::uint64_t seed = 37, int n_segments = 100, int workers = 0);

// tau_r vs light-shift parameter with ballistic motion at T = c_T Lambda.
struct Fig7Result {
  std::vector<PowerLawPoint> points; // Lambda in hbar*Gamma units
  std::vector<double> temperatures_k;
  PowerLawFit fit;
  double c_t; // K per hbar*Gamma
};
Fig7Result run_fig7(std::uint64_t seed = 41, int n_segments = 240, int workers = 0);

// Static atom at a bistable MOT00 antinode: spontaneous orientation.
struct OrientationResult {
  double outer_fraction = 0.0;  // emission-time samples with |<m>| > F/2
  double lr_g2_small_lag = 0.0; // mean over the first bins
  double lr_anti_sigma = 0.0;   // (1 - g2_lr) / err at small lag
  CorrelationHistogram circular_cross;
  CorrelationHistogram linear_cross;
  CorrelationHistogram total_auto;
  double circular_contrast = 0.0; // |A| of the intensity-normalized circular fit
  double linear_contrast = 0.0;   // matched-template |A| on the linear ratio
};
OrientationResult run_orientation(std::uint64_t seed = 43, int n_segments = 16,
                                  int workers = 0);

// Sum rule g2_pp + g2_pm = 2 g2 on one simulated run split after detection.
struct SumRuleStudy {
  CorrelationHistogram g2_pp, g2_pm, g2_total;
  SumRuleResult residual;
};
SumRuleStudy run_sum_rule(std::uint64_t seed = 47, int n_segments = 60, int workers = 0);

// Shared building block: simulate an ensemble of single-atom segments and
// push them through the detection chain. Exposed for the acceptance suite.
SegmentedRun segmented_single_atom_run(const TrajectoryConfig& cfg,
                                       const DetectionGeometry& geom,
                                       const AnalyzerConfig& analyzer,
                                       std::uint64_t seed, int n_segments,
                                       int workers);

// Standard moving-atom trajectory preset used by figs. 3-5.
TrajectoryConfig moving_atom_config(double detuning_gamma, double beam_intensity,
                                    double temperature_k);
// Idealized collection geometry for desk-scale statistics.
DetectionGeometry ideal_detection();

} // namespace motcorr::studies
