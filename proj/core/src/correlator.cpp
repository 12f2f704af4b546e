#include "motcorr/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motcorr {

namespace {

void check_sorted(const std::vector<std::uint64_t>& v, const char* name) {
  if (!std::is_sorted(v.begin(), v.end()))
    throw std::invalid_argument(std::string("correlator: unsorted stream ") + name);
}

std::size_t n_bins(std::uint64_t bin_width, std::uint64_t max_lag) {
  if (bin_width == 0) throw std::invalid_argument("correlator: bin width must be > 0");
  if (max_lag == 0 || max_lag < bin_width)
    throw std::invalid_argument("correlator: max_lag must be >= bin width");
  return static_cast<std::size_t>((max_lag + bin_width - 1) / bin_width);
}

// Core two-pointer pair accumulation into `counts`.
void accumulate_pairs(const std::vector<std::uint64_t>& a,
                      const std::vector<std::uint64_t>& b,
                      std::uint64_t bin_width, std::uint64_t max_lag,
                      bool exclude_self, std::vector<std::uint64_t>& counts) {
  std::size_t lo = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::uint64_t ta = a[i];
    while (lo < b.size() && b[lo] < ta) ++lo;
    for (std::size_t j = lo; j < b.size(); ++j) {
      const std::uint64_t lag = b[j] - ta;
      if (lag >= max_lag) break;
      if (exclude_self && i == j) continue;
      ++counts[static_cast<std::size_t>(lag / bin_width)];
    }
  }
}

} // namespace

CorrelationHistogram multistop_cross(const std::vector<std::uint64_t>& a,
                                     const std::vector<std::uint64_t>& b,
                                     std::uint64_t bin_width_ns,
                                     std::uint64_t max_lag_ns) {
  check_sorted(a, "A");
  check_sorted(b, "B");
  CorrelationHistogram h;
  h.bin_width_ns = bin_width_ns;
  h.counts.assign(n_bins(bin_width_ns, max_lag_ns), 0);
  accumulate_pairs(a, b, bin_width_ns, max_lag_ns, false, h.counts);
  return h;
}

CorrelationHistogram multistop_auto(const std::vector<std::uint64_t>& a,
                                    std::uint64_t bin_width_ns,
                                    std::uint64_t max_lag_ns) {
  check_sorted(a, "A");
  CorrelationHistogram h;
  h.bin_width_ns = bin_width_ns;
  h.counts.assign(n_bins(bin_width_ns, max_lag_ns), 0);
  accumulate_pairs(a, a, bin_width_ns, max_lag_ns, true, h.counts);
  return h;
}

CorrelationHistogram singlestop_cross(const std::vector<std::uint64_t>& a,
                                      const std::vector<std::uint64_t>& b,
                                      std::uint64_t bin_width_ns,
                                      std::uint64_t max_lag_ns) {
  check_sorted(a, "A");
  check_sorted(b, "B");
  CorrelationHistogram h;
  h.bin_width_ns = bin_width_ns;
  h.counts.assign(n_bins(bin_width_ns, max_lag_ns), 0);
  h.single_stop = true;
  std::size_t lo = 0;
  for (const std::uint64_t ta : a) {
    while (lo < b.size() && b[lo] < ta) ++lo;
    if (lo < b.size()) {
      const std::uint64_t lag = b[lo] - ta;
      if (lag < max_lag_ns)
        ++h.counts[static_cast<std::size_t>(lag / bin_width_ns)];
    }
  }
  return h;
}

CorrelationHistogram normalize(CorrelationHistogram h, double rate_a,
                               double rate_b, double duration_s) {
  if (rate_a <= 0 || rate_b <= 0)
    throw std::domain_error("normalize: zero rate leaves g2 undefined");
  const double bin_s = h.bin_width_ns * 1e-9;
  if (duration_s <= h.counts.size() * bin_s)
    throw std::domain_error("normalize: duration must exceed max lag");
  h.g2.resize(h.counts.size());
  h.err.resize(h.counts.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double tau = (k + 0.5) * bin_s;
    const double denom = rate_a * rate_b * bin_s * (duration_s - tau);
    h.g2[k] = h.counts[k] / denom;
    h.err[k] = std::sqrt(static_cast<double>(h.counts[k])) / denom;
  }
  h.normalized = true;
  h.rate_a = rate_a;
  h.rate_b = rate_b;
  h.duration_s = duration_s;
  return h;
}

CorrelationHistogram background_correct(CorrelationHistogram h, double p) {
  if (p <= 0 || p > 1)
    throw std::domain_error("background_correct: signal fraction outside (0, 1]");
  if (!h.normalized)
    throw std::invalid_argument("background_correct: histogram must be normalized first");
  const double inv_p2 = 1.0 / (p * p);
  for (std::size_t k = 0; k < h.g2.size(); ++k) {
    h.g2[k] = 1.0 + (h.g2[k] - 1.0) * inv_p2;
    h.err[k] *= inv_p2;
  }
  h.background_corrected = true;
  return h;
}

CorrelationAccumulator::CorrelationAccumulator(std::uint64_t bin_width_ns,
                                               std::uint64_t max_lag_ns,
                                               bool auto_mode)
    : bin_width_(bin_width_ns), max_lag_(max_lag_ns), auto_mode_(auto_mode),
      counts_(n_bins(bin_width_ns, max_lag_ns), 0) {}

void CorrelationAccumulator::add(const std::vector<std::uint64_t>& a,
                                 const std::vector<std::uint64_t>& b,
                                 std::uint64_t duration_ns) {
  check_sorted(a, "A");
  if (!auto_mode_) check_sorted(b, "B");
  accumulate_pairs(a, b, bin_width_, max_lag_, auto_mode_, counts_);
  n_a_ += a.size();
  n_b_ += b.size();
  ++n_segments_;
  sum_duration_s_ += duration_ns * 1e-9;
}

void CorrelationAccumulator::add_auto(const std::vector<std::uint64_t>& a,
                                      std::uint64_t duration_ns) {
  if (!auto_mode_)
    throw std::invalid_argument("CorrelationAccumulator: add_auto on a cross accumulator");
  add(a, a, duration_ns);
}

CorrelationHistogram CorrelationAccumulator::finalize() const {
  if (sum_duration_s_ <= 0 || n_a_ == 0 || n_b_ == 0)
    throw std::domain_error("CorrelationAccumulator: no data to normalize");
  CorrelationHistogram h;
  h.bin_width_ns = bin_width_;
  h.counts = counts_;
  const double bin_s = bin_width_ * 1e-9;
  const double rate_a = n_a_ / sum_duration_s_;
  const double rate_b = n_b_ / sum_duration_s_;
  h.g2.resize(h.counts.size());
  h.err.resize(h.counts.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double tau = (k + 0.5) * bin_s;
    // Finite-duration edge correction applied per segment.
    const double live = sum_duration_s_ - n_segments_ * tau;
    const double denom = rate_a * rate_b * bin_s * live;
    h.g2[k] = h.counts[k] / denom;
    h.err[k] = std::sqrt(static_cast<double>(h.counts[k])) / denom;
  }
  h.normalized = true;
  h.rate_a = rate_a;
  h.rate_b = rate_b;
  h.duration_s = sum_duration_s_;
  return h;
}

SumRuleResult sum_rule_residual(const CorrelationHistogram& pp,
                                const CorrelationHistogram& pm,
                                const CorrelationHistogram& total) {
  if (pp.bin_width_ns != pm.bin_width_ns || pp.bin_width_ns != total.bin_width_ns ||
      pp.bins() != pm.bins() || pp.bins() != total.bins())
    throw std::invalid_argument("sum_rule_residual: binning mismatch");
  if (!pp.normalized || !pm.normalized || !total.normalized)
    throw std::invalid_argument("sum_rule_residual: histograms must be normalized");
  SumRuleResult r;
  r.residual.resize(pp.bins());
  r.sigma.resize(pp.bins());
  for (std::size_t k = 0; k < pp.bins(); ++k) {
    r.residual[k] = pp.g2[k] + pm.g2[k] - 2.0 * total.g2[k];
    r.sigma[k] = std::sqrt(pp.err[k] * pp.err[k] + pm.err[k] * pm.err[k] +
                           4.0 * total.err[k] * total.err[k]);
    if (r.sigma[k] > 0)
      r.max_normalized = std::max(r.max_normalized, std::abs(r.residual[k]) / r.sigma[k]);
  }
  return r;
}

SegmentLabeling segment_by_atom_number(const std::vector<std::uint64_t>& ts,
                                       std::uint64_t duration_ns,
                                       std::uint64_t window_ns,
                                       double single_atom_rate,
                                       double background_rate) {
  if (window_ns == 0)
    throw std::invalid_argument("segment_by_atom_number: window must be > 0");
  if (single_atom_rate <= 0)
    throw std::invalid_argument("segment_by_atom_number: single_atom_rate must be > 0");
  check_sorted(ts, "merged");

  const std::size_t n_windows =
      static_cast<std::size_t>((duration_ns + window_ns - 1) / window_ns);
  std::vector<double> rate(n_windows, 0.0);
  for (std::uint64_t t : ts) {
    const std::size_t w = std::min<std::size_t>(t / window_ns, n_windows - 1);
    rate[w] += 1.0;
  }
  const double window_s = window_ns * 1e-9;
  for (double& r : rate) r /= window_s;

  auto classify = [&](double r) {
    const double n = (r - background_rate) / single_atom_rate;
    return std::max(0, static_cast<int>(std::lround(n)));
  };

  SegmentLabeling out;
  if (n_windows == 0) return out;

  int current = classify(rate[0]);
  std::uint64_t seg_start = 0;
  double seg_rate_sum = 0.0;
  std::size_t seg_windows = 0;
  int pending = current;
  std::size_t pending_run = 0;

  auto flush = [&](std::uint64_t end_ns) {
    out.segments.push_back({seg_start, end_ns, current,
                            seg_windows ? seg_rate_sum / seg_windows : 0.0});
  };

  for (std::size_t w = 0; w < n_windows; ++w) {
    const double r = rate[w];
    seg_rate_sum += r;
    ++seg_windows;
    // Hysteresis: only leave the current label when the rate sits outside a
    // +-0.5 single-atom-rate band for 3 consecutive windows.
    const double center = background_rate + current * single_atom_rate;
    if (std::abs(r - center) > 0.5 * single_atom_rate) {
      const int cand = classify(r);
      if (cand == pending) {
        ++pending_run;
      } else {
        pending = cand;
        pending_run = 1;
      }
      if (pending_run >= 3 && pending != current) {
        const std::uint64_t change_ns =
            static_cast<std::uint64_t>(w + 1 - pending_run) * window_ns;
        // Remove the confirmed windows from the closing segment's average.
        seg_rate_sum -= r;
        --seg_windows;
        if (change_ns > seg_start) {
          flush(change_ns);
        }
        current = pending;
        seg_start = change_ns;
        seg_rate_sum = r;
        seg_windows = 1;
        pending_run = 0;
      }
    } else {
      pending = current;
      pending_run = 0;
    }
  }
  flush(duration_ns);
  return out;
}

} // namespace motcorr
