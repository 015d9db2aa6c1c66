#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/llm/pipeline.hpp"
#include "detect/stats.hpp"

namespace detect::service {

struct LexicalColumn {
  std::string group;    // Complex | B1 | A2
  std::string measure;  // num_words | avg_word_length | sentence_count
  stats::DistributionSummary summary;
};

// Complex: num_words, avg_word_length; B1 and A2 references: those plus sentence_count.
// Groups without any text are omitted.
std::vector<LexicalColumn> lexical_table(const std::vector<SimplificationRecord>& records);
// Rows Count, Mean, Std., Min., Q1, Q2, Q3, Max.; one column per group/measure.
std::string lexical_table_csv(const std::vector<LexicalColumn>& columns);

using StrategyCounts = std::map<std::tuple<SplitAssignment, Strategy, MatchType>, std::size_t>;
StrategyCounts strategy_counts(const std::vector<SimplificationRecord>& records);
// subset,strategy,Complex-B1-A2,Complex-B1,B1-A2,Complex-A2,Total
std::string strategy_counts_csv(const StrategyCounts& counts);

// Judge comparison on the pairs both judges scored: spread of per-pair mean scores (score
// diversity, Levene), mean per-row std over runs (sampling stability, Welch t) and the
// correlation of their mean scores. NaN where a statistic is undefined.
struct JudgeSelectionRow {
  std::string criterion;
  std::string judge_a;
  std::string judge_b;
  std::size_t n = 0;
  double diversity_std_a = 0.0;
  double diversity_std_b = 0.0;
  double levene_p = 0.0;
  double row_std_mean_a = 0.0;
  double row_std_mean_b = 0.0;
  double welch_p = 0.0;
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
};

std::vector<JudgeSelectionRow> judge_selection(const std::vector<llm::JudgeSample>& samples);
std::string judge_selection_csv(const std::vector<JudgeSelectionRow>& rows);

}  // namespace detect::service
