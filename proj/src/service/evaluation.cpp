#include "detect/service/evaluation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "detect/error.hpp"

namespace detect::service {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::human: return "Human";
    case Source::llm: return "LLM";
    case Source::detect: return "DEtect";
    case Source::bleu: return "BLEU";
    case Source::sari: return "SARI";
    case Source::bertscore: return "BERTScoreP";
  }
  return "?";
}

std::string_view criterion_name(std::size_t i) {
  static constexpr std::string_view names[] = {"simplicity", "meaning_preservation", "fluency", "total"};
  return names[i];
}

EvalRow::EvalRow() {
  for (auto& per_source : values) per_source.fill(std::numeric_limits<double>::quiet_NaN());
}

std::string CorrelationCell::comparison() const {
  return std::string(to_string(a)) + " vs " + std::string(to_string(b));
}

namespace {

std::optional<stats::TestResult> guarded(auto&& fn) {
  try {
    return fn();
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

std::string number(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << v;
  return ss.str();
}

// p-values span many magnitudes; keep significant digits instead of fixed decimals.
std::string p_number(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<CorrelationCell> correlation_report(const std::vector<EvalRow>& rows, std::size_t permutations,
                                                std::uint64_t seed) {
  std::vector<Source> present;
  for (Source s : kSources) {
    for (const auto& r : rows) {
      if (!std::isnan(r.at(s, 0)) || !std::isnan(r.at(s, kEvalCriteria - 1))) {
        present.push_back(s);
        break;
      }
    }
  }
  const std::pair<std::string, std::optional<Strategy>> subsets[] = {
      {"all", std::nullopt}, {"split", Strategy::split}, {"delete", Strategy::del}, {"paraphrase", Strategy::paraphrase}};

  std::vector<CorrelationCell> cells;
  for (const auto& [subset, strategy] : subsets) {
    for (std::size_t c = 0; c < kEvalCriteria; ++c) {
      for (Source a : present) {
        for (Source b : present) {
          CorrelationCell cell{a, b, c, subset, 0, std::nullopt, std::nullopt};
          std::vector<double> x, y;
          for (const auto& r : rows) {
            if (strategy && r.strategy != *strategy) continue;
            const double va = r.at(a, c), vb = r.at(b, c);
            if (std::isnan(va) || std::isnan(vb)) continue;
            x.push_back(va);
            y.push_back(vb);
          }
          cell.n = x.size();
          if (x.size() >= 3) {
            if (permutations > 0) {
              cell.pearson = guarded([&] { return stats::pearson_permutation(x, y, permutations, seed); });
              cell.spearman = guarded([&] { return stats::spearman_permutation(x, y, permutations, seed); });
            } else {
              cell.pearson = guarded([&] { return stats::pearson(x, y); });
              cell.spearman = guarded([&] { return stats::spearman(x, y); });
            }
          }
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

std::string report_csv(const std::vector<CorrelationCell>& cells) {
  std::string out = "comparison,criterion,pearson_r,pearson_p,spearman_rho,spearman_p,n,strategy_subset\n";
  for (const auto& c : cells) {
    out += c.comparison() + "," + std::string(criterion_name(c.criterion)) + ",";
    out += c.pearson ? number(c.pearson->statistic) + "," + p_number(c.pearson->p_value) : std::string("n/a,n/a");
    out += ",";
    out += c.spearman ? number(c.spearman->statistic) + "," + p_number(c.spearman->p_value) : std::string("n/a,n/a");
    out += "," + std::to_string(c.n) + "," + c.subset + "\n";
  }
  return out;
}

}  // namespace detect::service
