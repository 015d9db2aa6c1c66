#pragma once

// Independent reference implementations used only by the tests. They are written from the
// textbook definitions, deliberately naive (O(n^2), string-keyed maps, long double), and share
// no code with the library beyond the tokenizer whose output they are fed.

#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

// BLEU-4 as documented for the library: unsmoothed unigram precision, add-one smoothing on
// orders 2..4, closest-reference brevity penalty (shorter reference wins ties).
double bleu(const Tokens& candidate, const std::vector<Tokens>& references);

// SARI per the reference formulation (counts replicated per reference), averaged over the
// orders in which any of source/candidate/references has an n-gram.
double sari(const Tokens& source, const Tokens& candidate, const std::vector<Tokens>& references);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
// Ranks by counting smaller and equal values.
std::vector<double> ranks(const std::vector<double>& v);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Coincidence-matrix formulation over the distinct observed values; NaN = missing.
// ratings[rater][item].
double krippendorff_interval(const std::vector<std::vector<double>>& ratings);

// Brown-Forsythe with mean centering (= Levene's original), F statistic only.
double levene_w(const std::vector<std::vector<double>>& groups);
struct Welch {
  double t;
  double dof;
};
Welch welch(const std::vector<double>& a, const std::vector<double>& b);

// Composite Simpson integration of the standard normal density from 0 to |z|.
double normal_cdf_simpson(double z, int intervals = 20000);

}  // namespace oracle
