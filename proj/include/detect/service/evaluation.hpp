#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/stats.hpp"

namespace detect::service {

// Score sources in report order.
enum class Source { human, llm, detect, bleu, sari, bertscore };
inline constexpr Source kSources[] = {Source::human, Source::llm,  Source::detect,
                                      Source::bleu,  Source::sari, Source::bertscore};
std::string_view to_string(Source s);

// simplicity, meaning_preservation, fluency, total
inline constexpr std::size_t kEvalCriteria = 4;
std::string_view criterion_name(std::size_t i);

// One evaluated (record, system) pair. Missing values are NaN. Single-number metrics (BLEU,
// SARI, BERTScoreP) carry the same value in every criterion column.
struct EvalRow {
  std::string record_id;
  std::string system_id;
  Strategy strategy = Strategy::paraphrase;
  std::array<std::array<double, kEvalCriteria>, 6> values;

  EvalRow();
  double& at(Source s, std::size_t criterion) { return values[static_cast<std::size_t>(s)][criterion]; }
  double at(Source s, std::size_t criterion) const { return values[static_cast<std::size_t>(s)][criterion]; }
};

struct CorrelationCell {
  Source a = Source::human;
  Source b = Source::human;
  std::size_t criterion = 0;
  std::string subset;  // all | split | delete | paraphrase
  std::size_t n = 0;
  std::optional<stats::TestResult> pearson;  // empty: fewer than 3 rows or zero variance
  std::optional<stats::TestResult> spearman;

  std::string comparison() const;  // "Human vs LLM"
};

// Every ordered pair of sources present in the rows (diagonal included), per criterion and
// strategy subset, over the rows where both values exist. permutations > 0 swaps the
// parametric p-values for seeded permutation p-values.
std::vector<CorrelationCell> correlation_report(const std::vector<EvalRow>& rows, std::size_t permutations = 0,
                                                std::uint64_t seed = 0);

// Columns: comparison, criterion, pearson_r, pearson_p, spearman_rho, spearman_p, n, strategy_subset.
std::string report_csv(const std::vector<CorrelationCell>& cells);

}  // namespace detect::service
