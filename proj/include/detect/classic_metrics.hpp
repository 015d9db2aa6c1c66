#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace detect {

class EmbeddingProvider;

enum class MetricName { BLEU, SARI, BERTScoreP, FRE };
std::string_view to_string(MetricName m);

struct MetricScore {
  MetricName name;
  double value = 0.0;  // BLEU, SARI and BERTScoreP on [0,1]; FRE unbounded
  double reported() const { return name == MetricName::FRE ? value : value * 100.0; }
};

// Clipped n-gram matches and candidate n-gram totals for orders 1..4.
struct NgramCounts {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
};

NgramCounts bleu_counts(const std::vector<std::string>& candidate,
                        const std::vector<std::vector<std::string>>& references);

// Sentence-level BLEU-4, uniform weights. Unigram precision is unsmoothed; orders 2..4 use
// add-one smoothing. Brevity penalty uses the closest reference length (shorter on ties).
MetricScore bleu(std::string_view candidate, const std::vector<std::string>& references);

struct SariComponents {
  double keep = 0.0;
  double del = 0.0;
  double add = 0.0;
  double score() const { return (keep + del + add) / 3.0; }
};

// SARI: keep F1, deletion precision and addition F1 averaged over n = 1..4, with source and
// candidate counts replicated once per reference. Any precision or recall whose n-gram set
// is empty counts as 1.
// Orders for which neither source, candidate nor any reference has an n-gram are skipped.
SariComponents sari_components(std::string_view source, std::string_view candidate,
                               const std::vector<std::string>& references);
MetricScore sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references);

// Greedy cosine matching of candidate tokens against reference tokens, averaged over
// candidate tokens, maximized over references. No IDF weighting, no baseline rescaling.
// `raw` is in [-1,1]; the returned MetricScore value is clamped to [0,1].
double bertscore_precision_raw(std::string_view candidate, const std::vector<std::string>& references,
                               const EmbeddingProvider& embedder);
MetricScore bertscore_precision(std::string_view candidate, const std::vector<std::string>& references,
                                const EmbeddingProvider& embedder);

struct FreCoefficients {
  double base;
  double per_sentence_length;
  double per_syllables;

  static constexpr FreCoefficients english() { return {206.835, 1.015, 84.6}; }
  static constexpr FreCoefficients german_amstad() { return {180.0, 1.0, 58.5}; }
};

// Vowel groups over a e i o u ä ö ü y; diphthongs fall out as one group. At least 1 per word.
std::size_t count_syllables(std::string_view word);

MetricScore fre(std::string_view text, FreCoefficients coefficients = FreCoefficients::german_amstad());

}  // namespace detect
