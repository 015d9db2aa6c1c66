#include "detect/stats.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "detect/error.hpp"
#include "detect/hashing.hpp"

namespace detect::stats {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::pearson: return "pearson";
    case Method::spearman: return "spearman";
    case Method::krippendorff_interval: return "krippendorff_interval";
    case Method::levene: return "levene";
    case Method::welch_t: return "welch_t";
  }
  return "?";
}

RatingsMatrix::RatingsMatrix(std::size_t raters, std::size_t items, std::vector<double> cells)
    : raters_(raters), items_(items), cells_(std::move(cells)) {
  if (cells_.size() != raters * items) throw InvalidArgument("ratings matrix storage does not match its shape");
}

double mean(std::span<const double> v) {
  if (v.empty()) throw DegenerateInput("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const boost::math::students_t dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double f_upper_p(double f, double dof1, double dof2) {
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  const boost::math::fisher_f dist(dof1, dof2);
  return std::clamp(boost::math::cdf(boost::math::complement(dist, f)), 0.0, 1.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

double correlation(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("correlation undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("correlation inputs differ in length");
  if (x.size() < 3) throw DegenerateInput("correlation needs at least 3 pairs");
}

TestResult with_t_p(double r, std::size_t n, Method method) {
  const double dof = static_cast<double>(n) - 2.0;
  double p = 0.0;
  if (std::abs(r) < 1.0) {
    const double t = r * std::sqrt(dof / (1.0 - r * r));
    p = student_t_two_sided_p(t, dof);
  }
  return {r, p, method, dof};
}

TestResult permutation(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                       std::uint64_t seed, Method method) {
  const double observed = correlation(x, y);
  std::vector<double> shuffled(y.begin(), y.end());
  SplitMix64 rng(seed);
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    if (std::abs(correlation(x, shuffled)) >= std::abs(observed) - 1e-12) ++extreme;
  }
  const double pval = (static_cast<double>(extreme) + 1.0) / (static_cast<double>(permutations) + 1.0);
  return {observed, pval, method, static_cast<double>(x.size()) - 2.0};
}

double centered_ss(const std::vector<double>& v) {
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss;
}

}  // namespace

std::vector<double> mid_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

TestResult pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return with_t_p(correlation(x, y), x.size(), Method::pearson);
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return with_t_p(correlation(rx, ry), x.size(), Method::spearman);
}

TestResult pearson_permutation(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                               std::uint64_t seed) {
  check_pair(x, y);
  return permutation(x, y, permutations, seed, Method::pearson);
}

TestResult spearman_permutation(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                                std::uint64_t seed) {
  check_pair(x, y);
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return permutation(rx, ry, permutations, seed, Method::spearman);
}

double krippendorff_alpha_interval(const RatingsMatrix& m) {
  if (m.raters() < 2) throw DegenerateInput("krippendorff alpha needs at least 2 raters");
  // Pairable values: per item, the values of raters who rated it, kept when m_u >= 2.
  std::vector<std::vector<double>> units;
  for (std::size_t item = 0; item < m.items(); ++item) {
    std::vector<double> values;
    for (std::size_t r = 0; r < m.raters(); ++r) {
      const double v = m(r, item);
      if (!RatingsMatrix::is_missing(v)) values.push_back(v);
    }
    if (values.size() >= 2) units.push_back(std::move(values));
  }
  if (units.empty()) throw DegenerateInput("krippendorff alpha: no item is rated by two raters");

  double n = 0.0;
  double observed = 0.0;
  std::vector<double> all;
  for (const auto& u : units) {
    const auto mu = static_cast<double>(u.size());
    n += mu;
    // sum over ordered pairs i != j of (v_i - v_j)^2 equals 2 m sum (v - mean)^2
    observed += 2.0 * mu * centered_ss(u) / (mu - 1.0);
    all.insert(all.end(), u.begin(), u.end());
  }
  const double expected_pairs = 2.0 * n * centered_ss(all);
  const double d_o = observed / n;
  const double d_e = expected_pairs / (n * (n - 1.0));
  if (d_e <= 0.0) {
    if (d_o <= 0.0) return 1.0;
    throw DegenerateInput("krippendorff alpha: zero expected disagreement");
  }
  return 1.0 - d_o / d_e;
}

TestResult levene(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DegenerateInput("levene needs at least 2 groups");
  std::vector<std::vector<double>> z;
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DegenerateInput("levene needs at least 2 observations per group");
    const double m = mean(g);
    std::vector<double> dev;
    dev.reserve(g.size());
    for (double x : g) dev.push_back(std::abs(x - m));
    total += g.size();
    z.push_back(std::move(dev));
  }
  std::vector<double> flat;
  for (const auto& d : z) flat.insert(flat.end(), d.begin(), d.end());
  const double grand = mean(flat);
  double between = 0.0, within = 0.0;
  for (const auto& d : z) {
    const double gm = mean(d);
    between += static_cast<double>(d.size()) * (gm - grand) * (gm - grand);
    for (double x : d) within += (x - gm) * (x - gm);
  }
  const auto k = static_cast<double>(groups.size());
  const auto big_n = static_cast<double>(total);
  const double dof1 = k - 1.0;
  const double dof2 = big_n - k;
  if (within == 0.0) {
    if (between == 0.0) return {0.0, 1.0, Method::levene, dof1};
    throw DegenerateInput("levene: zero within-group spread of absolute deviations");
  }
  const double w = (dof2 / dof1) * (between / within);
  return {w, f_upper_p(w, dof1, dof2), Method::levene, dof1};
}

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateInput("welch t needs at least 2 values per sample");
  const double ma = mean(a), mb = mean(b);
  const double va = sample_std(a) * sample_std(a);
  const double vb = sample_std(b) * sample_std(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 1.0, Method::welch_t, na + nb - 2.0};
    throw DegenerateInput("welch t: both samples have zero variance");
  }
  const double t = (ma - mb) / std::sqrt(se2);
  const double dof = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  return {t, student_t_two_sided_p(t, dof), Method::welch_t, dof};
}

double quantile_linear(std::vector<double> sorted, double p) {
  if (sorted.empty()) throw DegenerateInput("quantile of empty sample");
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DistributionSummary distribution_summary(std::span<const double> values) {
  if (values.empty()) throw DegenerateInput("distribution summary of empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  DistributionSummary s;
  s.count = v.size();
  s.mean = mean(v);
  s.std = sample_std(v);
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_linear(v, 0.25);
  s.median = quantile_linear(v, 0.5);
  s.q3 = quantile_linear(v, 0.75);
  return s;
}

}  // namespace detect::stats
