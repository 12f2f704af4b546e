#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <vector>

#include "motcorr/correlator.hpp"
#include "motcorr/rng.hpp"

using namespace motcorr;

TEST_SUITE_BEGIN("correlator");

namespace {

std::vector<std::uint64_t> poisson_stream(Rng& rng, double rate_hz,
                                          double duration_s) {
  std::vector<std::uint64_t> ts;
  double t = 0.0;
  while (true) {
    t += rng.exponential() / rate_hz;
    if (t >= duration_s) break;
    ts.push_back(static_cast<std::uint64_t>(t * 1e9));
  }
  return ts;
}

std::vector<std::uint64_t> brute_force_cross(const std::vector<std::uint64_t>& a,
                                             const std::vector<std::uint64_t>& b,
                                             std::uint64_t bin, std::uint64_t lag,
                                             bool auto_mode) {
  std::vector<std::uint64_t> counts(lag / bin, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (auto_mode && i == j) continue;
      if (b[j] < a[i]) continue;
      const std::uint64_t tau = b[j] - a[i];
      if (tau < lag) ++counts[tau / bin];
    }
  return counts;
}

} // namespace

TEST_CASE("multistop equals O(n^2) brute force on 100 random streams") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int na = 1 + static_cast<int>(rng.uniform() * 40);
    const int nb = 1 + static_cast<int>(rng.uniform() * 40);
    std::vector<std::uint64_t> a(na), b(nb);
    for (auto& t : a) t = static_cast<std::uint64_t>(rng.uniform() * 10000);
    for (auto& t : b) t = static_cast<std::uint64_t>(rng.uniform() * 10000);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::uint64_t bin = 1 + static_cast<std::uint64_t>(rng.uniform() * 20);
    const std::uint64_t nb_bins = 2 + static_cast<std::uint64_t>(rng.uniform() * 30);
    const auto h = multistop_cross(a, b, bin, bin * nb_bins);
    const auto ref = brute_force_cross(a, b, bin, bin * nb_bins, false);
    REQUIRE(h.counts.size() == ref.size());
    CHECK(h.counts == ref);
  }
}

TEST_CASE("auto mode excludes self pairs") {
  const std::vector<std::uint64_t> a = {0, 5, 5, 12, 40};
  const auto h = multistop_auto(a, 5, 50);
  // Ordered pairs with t_j >= t_i, i != j; the duplicate timestamp at t=5
  // contributes a lag-0 pair in both orders.
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 11);
  CHECK(h.counts[0] == 2);
  const auto ref = brute_force_cross(a, a, 5, 50, true);
  CHECK(h.counts == ref);
}

TEST_CASE("poisson fixture normalizes to one") {
  Rng rng(77);
  const double T = 5.0;
  const auto a = poisson_stream(rng, 20000.0, T);
  const auto b = poisson_stream(rng, 15000.0, T);
  auto h = multistop_cross(a, b, 1000, 200000);
  h = normalize(std::move(h), a.size() / T, b.size() / T, T);
  REQUIRE(h.normalized);
  double mean = 0.0;
  for (double v : h.g2) mean += v;
  mean /= h.g2.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("single-stop estimator shows the pile-up envelope") {
  // Classic distortion: with start-stop logic the measured distribution is
  // g2(tau) r_B exp(-r_B tau); on Poisson data the ratio to the multistop
  // estimator is exp(-r_B tau).
  Rng rng(123);
  const double T = 20.0, rb = 50000.0;
  const auto a = poisson_stream(rng, 30000.0, T);
  const auto b = poisson_stream(rng, rb, T);
  const std::uint64_t bin = 2000, lag = 60000;
  auto multi = normalize(multistop_cross(a, b, bin, lag), a.size() / T,
                         b.size() / T, T);
  auto single = normalize(singlestop_cross(a, b, bin, lag), a.size() / T,
                          b.size() / T, T);
  REQUIRE(single.single_stop);
  for (std::size_t k = 0; k < multi.bins(); ++k) {
    const double tau = multi.lag_s(k);
    const double envelope = std::exp(-rb * tau);
    const double measured = single.g2[k] / multi.g2[k];
    CHECK(std::abs(measured - envelope) < 0.05);
  }
}

TEST_CASE("normalization denominator uses the shrinking window") {
  // Two clicks exactly: C(tau) known, so g2 = C / (ra rb dt (T - tau)).
  const std::vector<std::uint64_t> a = {0};
  const std::vector<std::uint64_t> b = {500};
  auto h = multistop_cross(a, b, 1000, 10000);
  const double T = 1.0;
  h = normalize(std::move(h), 1.0, 1.0, T);
  const double expected = 1.0 / (1.0 * 1.0 * 1e-6 * (T - h.lag_s(0)));
  CHECK(h.g2[0] == doctest::Approx(expected).epsilon(1e-9));
  CHECK_THROWS_AS(normalize(multistop_cross(a, b, 1000, 10000), 0.0, 1.0, T),
                  std::domain_error);
}

TEST_CASE("background correction rescales contrast by 1/p^2") {
  Rng rng(9);
  const double T = 1.0;
  auto h = multistop_cross(poisson_stream(rng, 5000, T),
                           poisson_stream(rng, 5000, T), 1000, 20000);
  h = normalize(std::move(h), 5000, 5000, T);
  const auto c = background_correct(h, 0.5);
  for (std::size_t k = 0; k < h.bins(); ++k)
    CHECK(c.g2[k] == doctest::Approx(1.0 + (h.g2[k] - 1.0) / 0.25).epsilon(1e-12));
  CHECK_THROWS_AS(background_correct(h, 0.0), std::domain_error);
  CHECK_THROWS_AS(background_correct(h, 1.2), std::domain_error);
}

TEST_CASE("accumulator equals a single concatenated-normalization pass") {
  Rng rng(31);
  CorrelationAccumulator acc(500, 10000, false);
  std::uint64_t n_a = 0, n_b = 0;
  std::vector<std::uint64_t> pooled(10000 / 500, 0);
  const double seg_s = 0.5;
  const int n_seg = 6;
  for (int s = 0; s < n_seg; ++s) {
    const auto a = poisson_stream(rng, 8000, seg_s);
    const auto b = poisson_stream(rng, 6000, seg_s);
    acc.add(a, b, 500000000);
    const auto h = multistop_cross(a, b, 500, 10000);
    for (std::size_t k = 0; k < h.counts.size(); ++k) pooled[k] += h.counts[k];
    n_a += a.size();
    n_b += b.size();
  }
  const auto fin = acc.finalize();
  CHECK(acc.segments() == n_seg);
  const double ra = n_a / (n_seg * seg_s), rb = n_b / (n_seg * seg_s);
  for (std::size_t k = 0; k < fin.bins(); ++k) {
    CHECK(fin.counts[k] == pooled[k]);
    const double denom = ra * rb * 500e-9 * n_seg * (seg_s - fin.lag_s(k));
    CHECK(fin.g2[k] == doctest::Approx(pooled[k] / denom).epsilon(1e-9));
  }
}

TEST_CASE("sum rule holds for random channel splitting and fails for state-dependent splitting") {
  Rng rng(55);
  const double T = 10.0;
  // Parent stream with genuine correlations: doubled clicks (every event
  // also spawns a partner 1-3 us later) produce strong bunching.
  std::vector<std::uint64_t> parent;
  {
    double t = 0.0;
    while (true) {
      t += rng.exponential() / 20000.0;
      if (t >= T) break;
      const auto ns = static_cast<std::uint64_t>(t * 1e9);
      parent.push_back(ns);
      parent.push_back(ns + 1000 + static_cast<std::uint64_t>(rng.uniform() * 2000));
    }
    std::sort(parent.begin(), parent.end());
  }

  // Unbiased random split: the identity g2_pp + g2_pm = 2 g2 must hold.
  std::vector<std::uint64_t> pa, pb;
  for (auto tn : parent) (rng.uniform() < 0.5 ? pa : pb).push_back(tn);
  const std::uint64_t bin = 1000, lag = 20000;
  auto g2pp = normalize(multistop_auto(pa, bin, lag), pa.size() / T, pa.size() / T, T);
  auto g2pm = normalize(multistop_cross(pa, pb, bin, lag), pa.size() / T, pb.size() / T, T);
  auto g2tt = normalize(multistop_auto(parent, bin, lag), parent.size() / T,
                        parent.size() / T, T);
  const auto ok = sum_rule_residual(g2pp, g2pm, g2tt);
  CHECK(ok.max_normalized < 3.0);

  // Correlated (state-dependent) split: partners always land on the other
  // channel. The identity breaks by construction.
  std::vector<std::uint64_t> qa, qb;
  for (std::size_t i = 0; i < parent.size(); ++i)
    ((i % 2) == 0 ? qa : qb).push_back(parent[i]);
  std::sort(qa.begin(), qa.end());
  std::sort(qb.begin(), qb.end());
  auto h2pp = normalize(multistop_auto(qa, bin, lag), qa.size() / T, qa.size() / T, T);
  auto h2pm = normalize(multistop_cross(qa, qb, bin, lag), qa.size() / T, qb.size() / T, T);
  const auto bad = sum_rule_residual(h2pp, h2pm, g2tt);
  CHECK(bad.max_normalized > 5.0);
}

TEST_CASE("segment labeling by atom number") {
  Rng rng(83);
  std::vector<std::uint64_t> ts;
  const double r1 = 50000.0;  // single-atom rate
  // 0 atoms for 0.2 s, 1 atom for 0.3 s, 2 atoms for 0.3 s, 1 atom to 1.0 s.
  auto emit = [&](double t0, double t1, double rate) {
    double t = t0;
    while (true) {
      t += rng.exponential() / rate;
      if (t >= t1) break;
      ts.push_back(static_cast<std::uint64_t>(t * 1e9));
    }
  };
  emit(0.0, 0.2, 100.0);  // background only
  emit(0.2, 0.5, r1);
  emit(0.5, 0.8, 2.0 * r1);
  emit(0.8, 1.0, r1);
  std::sort(ts.begin(), ts.end());
  const auto lab = segment_by_atom_number(ts, 1000000000, 10000000, r1, 100.0);
  REQUIRE(!lab.segments.empty());
  // Covering and non-overlapping.
  CHECK(lab.segments.front().t_start_ns == 0);
  CHECK(lab.segments.back().t_end_ns == 1000000000);
  for (std::size_t i = 1; i < lab.segments.size(); ++i)
    CHECK(lab.segments[i].t_start_ns == lab.segments[i - 1].t_end_ns);
  // The four plateaus are recovered in order.
  std::vector<int> ns;
  for (const auto& s : lab.segments)
    if (ns.empty() || ns.back() != s.atom_count) ns.push_back(s.atom_count);
  CHECK(ns == std::vector<int>{0, 1, 2, 1});
}

TEST_CASE("invalid correlator inputs throw") {
  const std::vector<std::uint64_t> sorted = {1, 2, 3};
  const std::vector<std::uint64_t> unsorted = {3, 1, 2};
  CHECK_THROWS_AS(multistop_cross(unsorted, sorted, 10, 100), std::invalid_argument);
  CHECK_THROWS_AS(multistop_cross(sorted, sorted, 10, 0), std::invalid_argument);
}

TEST_SUITE_END();
