#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace motcorr {

struct CorrelationHistogram {
  std::uint64_t bin_width_ns = 0;
  std::vector<std::uint64_t> counts; // raw coincidences per lag bin
  std::vector<double> g2;            // filled by normalize()
  std::vector<double> err;           // per-bin Poisson standard error
  bool normalized = false;
  bool single_stop = false;          // pile-up biased estimator
  bool background_corrected = false;
  double rate_a = 0.0, rate_b = 0.0; // Hz, recorded by normalize()
  double duration_s = 0.0;
  std::string channel_a, channel_b;

  std::size_t bins() const { return counts.size(); }
  double lag_s(std::size_t k) const { return (k + 0.5) * bin_width_ns * 1e-9; }
};

// Multi-stop correlation: every ordered pair (a, b) with 0 <= t_b - t_a <
// max_lag contributes. Streams must be sorted; runs in O(n k) with k the mean
// number of partner clicks per lag window.
// Throws std::invalid_argument on unsorted input or max_lag <= 0.
CorrelationHistogram multistop_cross(const std::vector<std::uint64_t>& a,
                                     const std::vector<std::uint64_t>& b,
                                     std::uint64_t bin_width_ns,
                                     std::uint64_t max_lag_ns);

// Auto mode: same stream on both sides, self-pairs excluded.
CorrelationHistogram multistop_auto(const std::vector<std::uint64_t>& a,
                                    std::uint64_t bin_width_ns,
                                    std::uint64_t max_lag_ns);

// Single-stop (first partner only) estimator, kept as a pile-up demonstrator.
CorrelationHistogram singlestop_cross(const std::vector<std::uint64_t>& a,
                                      const std::vector<std::uint64_t>& b,
                                      std::uint64_t bin_width_ns,
                                      std::uint64_t max_lag_ns);

// g2(tau_k) = C(tau_k) / (r_a r_b dt (T - tau_k)), err = sqrt(C) / denom.
// Throws std::domain_error on zero rates or duration <= max lag.
CorrelationHistogram normalize(CorrelationHistogram hist, double rate_a,
                               double rate_b, double duration_s);

// g2_corr = 1 + (g2 - 1)/p^2 (uncorrelated background on both channels).
// Throws std::domain_error for p outside (0, 1].
CorrelationHistogram background_correct(CorrelationHistogram g2, double signal_fraction);

// Aggregates per-segment raw histograms with pooled-rate normalization;
// used for ensembles of statistically identical trajectory segments.
class CorrelationAccumulator {
 public:
  CorrelationAccumulator(std::uint64_t bin_width_ns, std::uint64_t max_lag_ns,
                         bool auto_mode);

  void add(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
           std::uint64_t duration_ns);
  void add_auto(const std::vector<std::uint64_t>& a, std::uint64_t duration_ns);

  // Pooled normalization: r = total counts / total duration per side.
  CorrelationHistogram finalize() const;
  std::uint64_t segments() const { return n_segments_; }

 private:
  std::uint64_t bin_width_, max_lag_;
  bool auto_mode_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_a_ = 0, n_b_ = 0, n_segments_ = 0;
  double sum_duration_s_ = 0.0;
  double sum_edge_s_ = 0.0; // sum over segments of (T - tau) handled per-bin at finalize
};

struct SumRuleResult {
  std::vector<double> residual; // g2_pp + g2_pm - 2 g2_total
  std::vector<double> sigma;    // quadrature-combined per-bin errors
  double max_normalized = 0.0;  // max |residual| / sigma
};

// Throws std::invalid_argument on binning mismatch or unnormalized input.
SumRuleResult sum_rule_residual(const CorrelationHistogram& g2_pp,
                                const CorrelationHistogram& g2_pm,
                                const CorrelationHistogram& g2_total);

struct Segment {
  std::uint64_t t_start_ns;
  std::uint64_t t_end_ns;
  int atom_count;
  double mean_rate; // Hz
};

struct SegmentLabeling {
  std::vector<Segment> segments; // non-overlapping, covering
};

// Windowed-rate atom-number classification, N ~ (rate - background)/single_atom_rate,
// with a +-0.5 single_atom_rate hysteresis band and 3-window confirmation.
// Throws std::invalid_argument for window_ns == 0 or single_atom_rate <= 0.
SegmentLabeling segment_by_atom_number(const std::vector<std::uint64_t>& merged_ts,
                                       std::uint64_t duration_ns,
                                       std::uint64_t window_ns,
                                       double single_atom_rate,
                                       double background_rate);

} // namespace motcorr
