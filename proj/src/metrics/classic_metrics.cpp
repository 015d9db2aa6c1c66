#include "detect/classic_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "detect/embedding.hpp"
#include "detect/error.hpp"
#include "detect/kernels.hpp"
#include "detect/text.hpp"

namespace detect {

std::string_view to_string(MetricName m) {
  switch (m) {
    case MetricName::BLEU: return "BLEU";
    case MetricName::SARI: return "SARI";
    case MetricName::BERTScoreP: return "BERTScoreP";
    case MetricName::FRE: return "FRE";
  }
  return "?";
}

namespace {

using Ngram = std::vector<std::string>;
using NgramCounter = std::map<Ngram, std::size_t>;

NgramCounter ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounter out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

void require_references(const std::vector<std::string>& references, const char* metric) {
  if (references.empty()) throw InvalidArgument(std::string(metric) + ": empty reference list");
}

}  // namespace

NgramCounts bleu_counts(const std::vector<std::string>& candidate,
                        const std::vector<std::vector<std::string>>& references) {
  NgramCounts out;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounter cand = ngrams(candidate, n);
    NgramCounter max_ref;
    for (const auto& ref : references) {
      for (const auto& [g, c] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    out.matches[n - 1] = matched;
    out.totals[n - 1] = total;
  }
  return out;
}

MetricScore bleu(std::string_view candidate, const std::vector<std::string>& references) {
  require_references(references, "BLEU");
  const auto cand = text::tokenize_words(candidate);
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(text::tokenize_words(r));
  if (cand.empty()) return {MetricName::BLEU, 0.0};

  const NgramCounts counts = bleu_counts(cand, refs);
  if (counts.matches[0] == 0) return {MetricName::BLEU, 0.0};
  double log_sum = std::log(static_cast<double>(counts.matches[0]) / static_cast<double>(counts.totals[0]));
  for (std::size_t n = 1; n < 4; ++n) {
    log_sum += std::log((static_cast<double>(counts.matches[n]) + 1.0) / (static_cast<double>(counts.totals[n]) + 1.0));
  }

  const auto c = static_cast<double>(cand.size());
  double r = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    const double gap = std::abs(len - c);
    if (gap < best_gap || (gap == best_gap && len < r)) {
      best_gap = gap;
      r = len;
    }
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  const double value = bp * std::exp(log_sum / 4.0);
  return {MetricName::BLEU, std::clamp(value, 0.0, 1.0)};
}

namespace {

// Per-order SARI terms; present is false when the order has no n-grams anywhere.
struct SariOrder {
  bool present = false;
  double keep = 0.0;
  double del = 0.0;
  double add = 0.0;
};

double f1(double p, double r) { return (p > 0.0 || r > 0.0) ? 2.0 * p * r / (p + r) : 0.0; }

SariOrder sari_order(const NgramCounter& s, const NgramCounter& c, const std::vector<NgramCounter>& rs) {
  SariOrder out;
  const auto numref = static_cast<std::size_t>(rs.size());
  NgramCounter r_all;
  for (const auto& r : rs) {
    for (const auto& [g, n] : r) r_all[g] += n;
  }
  out.present = !s.empty() || !c.empty() || !r_all.empty();
  if (!out.present) return out;

  auto get = [](const NgramCounter& m, const Ngram& g) -> std::size_t {
    const auto it = m.find(g);
    return it == m.end() ? 0 : it->second;
  };

  // Source and candidate counts are replicated once per reference.
  NgramCounter s_rep, c_rep;
  for (const auto& [g, n] : s) s_rep[g] = n * numref;
  for (const auto& [g, n] : c) c_rep[g] = n * numref;

  // keep
  double keep_p_sum = 0.0, keep_r_sum = 0.0;
  std::size_t keep_n = 0, keep_all_n = 0;
  for (const auto& [g, sn] : s_rep) {
    const std::size_t kept = std::min(sn, get(c_rep, g));
    const std::size_t all = std::min(sn, get(r_all, g));
    if (all > 0) ++keep_all_n;
    if (kept == 0) continue;
    ++keep_n;
    const std::size_t good = std::min(kept, get(r_all, g));
    keep_p_sum += static_cast<double>(good) / static_cast<double>(kept);
    if (all > 0) keep_r_sum += static_cast<double>(good) / static_cast<double>(all);
  }
  const double keep_p = keep_n ? keep_p_sum / static_cast<double>(keep_n) : 1.0;
  const double keep_r = keep_all_n ? keep_r_sum / static_cast<double>(keep_all_n) : 1.0;
  out.keep = f1(keep_p, keep_r);

  // deletion (precision only)
  double del_sum = 0.0;
  std::size_t del_n = 0;
  for (const auto& [g, sn] : s_rep) {
    const std::size_t cn = get(c_rep, g);
    if (sn <= cn) continue;
    const std::size_t deleted = sn - cn;
    const std::size_t rn = get(r_all, g);
    const std::size_t good = deleted > rn ? deleted - rn : 0;
    ++del_n;
    del_sum += static_cast<double>(good) / static_cast<double>(deleted);
  }
  out.del = del_n ? del_sum / static_cast<double>(del_n) : 1.0;

  // addition (set based)
  std::size_t added = 0, added_good = 0, addable = 0;
  for (const auto& [g, n] : c) {
    if (s.count(g)) continue;
    ++added;
    if (r_all.count(g)) ++added_good;
  }
  for (const auto& [g, n] : r_all) {
    if (!s.count(g)) ++addable;
  }
  const double add_p = added ? static_cast<double>(added_good) / static_cast<double>(added) : 1.0;
  const double add_r = addable ? static_cast<double>(added_good) / static_cast<double>(addable) : 1.0;
  out.add = f1(add_p, add_r);
  return out;
}

}  // namespace

SariComponents sari_components(std::string_view source, std::string_view candidate,
                               const std::vector<std::string>& references) {
  require_references(references, "SARI");
  const auto s_tok = text::tokenize_words(source);
  const auto c_tok = text::tokenize_words(candidate);
  std::vector<std::vector<std::string>> r_tok;
  for (const auto& r : references) r_tok.push_back(text::tokenize_words(r));

  SariComponents sum;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<NgramCounter> rs;
    for (const auto& r : r_tok) rs.push_back(ngrams(r, n));
    const SariOrder o = sari_order(ngrams(s_tok, n), ngrams(c_tok, n), rs);
    if (!o.present) continue;
    ++orders;
    sum.keep += o.keep;
    sum.del += o.del;
    sum.add += o.add;
  }
  if (orders == 0) return {};
  const auto k = static_cast<double>(orders);
  return {sum.keep / k, sum.del / k, sum.add / k};
}

MetricScore sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references) {
  return {MetricName::SARI, std::clamp(sari_components(source, candidate, references).score(), 0.0, 1.0)};
}

double bertscore_precision_raw(std::string_view candidate, const std::vector<std::string>& references,
                               const EmbeddingProvider& embedder) {
  require_references(references, "BERTScore");
  const TextEmbedding cand = embedder.embed(candidate);
  if (cand.token_count() == 0) throw InvalidArgument("BERTScore: candidate has no tokens");
  const std::size_t dim = embedder.dimension();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& ref_text : references) {
    const TextEmbedding ref = embedder.embed(ref_text);
    if (ref.token_count() == 0) continue;
    std::vector<double> sim(cand.token_count() * ref.token_count());
    kernels::cosine_matrix({cand.token_vectors, cand.token_count(), dim}, {ref.token_vectors, ref.token_count(), dim},
                           {sim, cand.token_count(), ref.token_count()});
    double total = 0.0;
    for (std::size_t i = 0; i < cand.token_count(); ++i) {
      const auto row = sim.begin() + static_cast<std::ptrdiff_t>(i * ref.token_count());
      total += *std::max_element(row, row + static_cast<std::ptrdiff_t>(ref.token_count()));
    }
    best = std::max(best, total / static_cast<double>(cand.token_count()));
  }
  if (!std::isfinite(best)) throw InvalidArgument("BERTScore: every reference is empty");
  return best;
}

MetricScore bertscore_precision(std::string_view candidate, const std::vector<std::string>& references,
                                const EmbeddingProvider& embedder) {
  return {MetricName::BERTScoreP, std::clamp(bertscore_precision_raw(candidate, references, embedder), 0.0, 1.0)};
}

std::size_t count_syllables(std::string_view word) {
  auto is_vowel = [](char32_t c) {
    switch (c) {
      case U'a': case U'e': case U'i': case U'o': case U'u': case U'y':
      case 0xE4: case 0xF6: case 0xFC:
        return true;
      default:
        return false;
    }
  };
  const std::u32string cps = text::decode_utf8(text::to_lower(word));
  std::size_t groups = 0;
  bool in_group = false;
  for (char32_t c : cps) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  return std::max<std::size_t>(groups, 1);
}

MetricScore fre(std::string_view text_in, FreCoefficients k) {
  const auto words = text::tokenize_words(text_in);
  const std::size_t sentences = text::count_sentences(text_in);
  if (sentences == 0 || words.empty()) throw InvalidArgument("FRE: text has no sentences");
  std::size_t syllables = 0;
  for (const auto& w : words) syllables += count_syllables(w);
  const auto nw = static_cast<double>(words.size());
  const double value = k.base - k.per_sentence_length * (nw / static_cast<double>(sentences)) -
                       k.per_syllables * (static_cast<double>(syllables) / nw);
  return {MetricName::FRE, value};
}

}  // namespace detect
