#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace detect::llm {

enum class Criterion { simplicity, meaning_preservation, fluency };
inline constexpr Criterion kCriteria[] = {Criterion::simplicity, Criterion::meaning_preservation, Criterion::fluency};
std::string_view to_string(Criterion c);

// Scores on [0, 100].
struct CriterionScores {
  double simplicity = 0.0;
  double meaning_preservation = 0.0;
  double fluency = 0.0;

  double operator[](Criterion c) const;
  double& operator[](Criterion c);
  bool in_range() const;
  friend bool operator==(const CriterionScores&, const CriterionScores&) = default;
};

// min(S, MP, F) when that minimum is below 25, otherwise 0.4 MP + 0.4 S + 0.2 F.
double total_score(const CriterionScores& s);

struct ParseResult {
  std::optional<CriterionScores> scores;
  std::string error;
  bool ok() const { return scores.has_value(); }
};

// Extracts the last "Simplicity", "Meaning Preservation" and "Fluency" numbers from a judge
// response. Labels are case-insensitive and may be wrapped in markdown bullets or bold, with
// ':' or '=' as separator. Any missing label or a value outside [0,100] fails the parse.
ParseResult parse_scores(std::string_view raw);

// Renders scores in the judge prompt's own output format ("Score:" block).
std::string format_scores(const CriterionScores& s);

}  // namespace detect::llm
