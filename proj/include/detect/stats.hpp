#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace detect::stats {

enum class Method { pearson, spearman, krippendorff_interval, levene, welch_t };
std::string_view to_string(Method m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::pearson;
  double dof = 0.0;  // degrees of freedom (first one for F tests)
};

// Raters x items ratings; NaN marks a missing cell.
class RatingsMatrix {
 public:
  static constexpr double missing = std::numeric_limits<double>::quiet_NaN();

  RatingsMatrix(std::size_t raters, std::size_t items) : raters_(raters), items_(items), cells_(raters * items, missing) {}
  RatingsMatrix(std::size_t raters, std::size_t items, std::vector<double> cells);

  std::size_t raters() const { return raters_; }
  std::size_t items() const { return items_; }
  double operator()(std::size_t rater, std::size_t item) const { return cells_[rater * items_ + item]; }
  void set(std::size_t rater, std::size_t item, double value) { cells_[rater * items_ + item] = value; }
  static bool is_missing(double v) { return std::isnan(v); }
  const std::vector<double>& cells() const { return cells_; }

 private:
  std::size_t raters_;
  std::size_t items_;
  std::vector<double> cells_;
};

// Sample correlation with a two-sided t-approximation p-value (n - 2 dof).
// Needs n >= 3 and non-zero variance in both inputs (DegenerateInput otherwise).
TestResult pearson(std::span<const double> x, std::span<const double> y);
// Pearson on mid-ranks.
TestResult spearman(std::span<const double> x, std::span<const double> y);

// Permutation p-value (two-sided, |r| >= |r_obs|), with the +1 correction; `seed` makes it
// reproducible.
TestResult pearson_permutation(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                               std::uint64_t seed);
TestResult spearman_permutation(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                                std::uint64_t seed);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> v);

// Krippendorff's alpha with the interval metric, pairable-values formulation: only items
// rated by at least two raters contribute. Perfect agreement with no expected disagreement
// returns 1.0. Throws DegenerateInput when no item is co-rated.
double krippendorff_alpha_interval(const RatingsMatrix& m);

// Levene's test with group means as centers; F(k - 1, N - k) p-value.
TestResult levene(const std::vector<std::vector<double>>& groups);

// Welch's unequal-variance t-test, Welch-Satterthwaite dof, two-sided p.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator; 0 for a single value
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Quartiles interpolate linearly between order statistics at position p * (n - 1).
DistributionSummary distribution_summary(std::span<const double> values);
double quantile_linear(std::vector<double> sorted, double p);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> v);

// Upper tail helpers backed by Boost.Math.
double student_t_two_sided_p(double t, double dof);
double f_upper_p(double f, double dof1, double dof2);
double normal_cdf(double z);

}  // namespace detect::stats
