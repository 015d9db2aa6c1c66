#include "detect/service/report.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "detect/error.hpp"

namespace detect::service {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

template <typename Fn>
double or_nan(Fn&& fn) {
  try {
    return fn();
  } catch (const DegenerateInput&) {
    return kNaN;
  }
}

}  // namespace

std::vector<LexicalColumn> lexical_table(const std::vector<SimplificationRecord>& records) {
  std::vector<LexicalColumn> out;
  auto add_group = [&](const std::string& group, const std::vector<std::string>& texts, bool sentences) {
    if (texts.empty()) return;
    std::vector<double> words, lengths, counts;
    for (const auto& t : texts) {
      const LexicalStats s = lexical_stats(t);
      words.push_back(static_cast<double>(s.num_words));
      lengths.push_back(s.avg_word_length);
      counts.push_back(static_cast<double>(s.sentence_count));
    }
    out.push_back({group, "num_words", stats::distribution_summary(words)});
    out.push_back({group, "avg_word_length", stats::distribution_summary(lengths)});
    if (sentences) out.push_back({group, "sentence_count", stats::distribution_summary(counts)});
  };
  std::vector<std::string> complex, b1, a2;
  for (const auto& r : records) {
    complex.push_back(r.complex);
    if (const auto* ref = r.reference(CefrLevel::B1)) b1.push_back(ref->text);
    if (const auto* ref = r.reference(CefrLevel::A2)) a2.push_back(ref->text);
  }
  add_group("Complex", complex, false);
  add_group("B1", b1, true);
  add_group("A2", a2, true);
  return out;
}

std::string lexical_table_csv(const std::vector<LexicalColumn>& columns) {
  std::string out = "statistic";
  for (const auto& c : columns) out += "," + c.group + ":" + c.measure;
  out += "\n";
  const std::pair<const char*, double stats::DistributionSummary::*> rows[] = {
      {"Mean", &stats::DistributionSummary::mean}, {"Std.", &stats::DistributionSummary::std},
      {"Min.", &stats::DistributionSummary::min},  {"Q1", &stats::DistributionSummary::q1},
      {"Q2", &stats::DistributionSummary::median}, {"Q3", &stats::DistributionSummary::q3},
      {"Max.", &stats::DistributionSummary::max}};
  out += "Count";
  for (const auto& c : columns) out += "," + fixed(static_cast<double>(c.summary.count), 2);
  out += "\n";
  for (const auto& [label, member] : rows) {
    out += label;
    for (const auto& c : columns) out += "," + fixed(c.summary.*member, 2);
    out += "\n";
  }
  return out;
}

StrategyCounts strategy_counts(const std::vector<SimplificationRecord>& records) {
  StrategyCounts counts;
  for (const auto& r : records) {
    const Strategy s = r.strategy ? *r.strategy : classify_strategy(r.complex, r.primary_reference().text);
    ++counts[{r.split, s, r.match_type}];
  }
  return counts;
}

std::string strategy_counts_csv(const StrategyCounts& counts) {
  const MatchType types[] = {MatchType::complex_b1_a2, MatchType::complex_b1, MatchType::b1_a2, MatchType::complex_a2};
  std::string out = "subset,strategy";
  for (MatchType m : types) out += "," + std::string(to_string(m));
  out += ",Total\n";
  std::set<SplitAssignment> subsets;
  for (const auto& [key, n] : counts) subsets.insert(std::get<0>(key));
  for (SplitAssignment subset : subsets) {
    for (Strategy s : {Strategy::del, Strategy::paraphrase, Strategy::split}) {
      std::size_t total = 0;
      out += std::string(to_string(subset)) + "," + std::string(to_string(s));
      for (MatchType m : types) {
        const auto it = counts.find({subset, s, m});
        const std::size_t n = it == counts.end() ? 0 : it->second;
        total += n;
        out += "," + std::to_string(n);
      }
      out += "," + std::to_string(total) + "\n";
    }
  }
  return out;
}

std::vector<JudgeSelectionRow> judge_selection(const std::vector<llm::JudgeSample>& samples) {
  const auto aggregates = llm::aggregate(samples);
  std::set<std::string> judges;
  for (const auto& a : aggregates) {
    for (const auto& [name, summary] : a.judges) judges.insert(name);
  }
  std::vector<JudgeSelectionRow> rows;
  const std::vector<std::string> names(judges.begin(), judges.end());
  for (llm::Criterion c : llm::kCriteria) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t k = i + 1; k < names.size(); ++k) {
        std::vector<double> mean_a, mean_b, std_a, std_b;
        for (const auto& agg : aggregates) {
          const auto ia = agg.judges.find(names[i]);
          const auto ib = agg.judges.find(names[k]);
          if (ia == agg.judges.end() || ib == agg.judges.end()) continue;
          mean_a.push_back(ia->second.mean[c]);
          mean_b.push_back(ib->second.mean[c]);
          std_a.push_back(ia->second.row_std[c]);
          std_b.push_back(ib->second.row_std[c]);
        }
        JudgeSelectionRow row;
        row.criterion = std::string(llm::to_string(c));
        row.judge_a = names[i];
        row.judge_b = names[k];
        row.n = mean_a.size();
        if (row.n == 0) continue;
        row.diversity_std_a = stats::sample_std(mean_a);
        row.diversity_std_b = stats::sample_std(mean_b);
        row.row_std_mean_a = stats::mean(std_a);
        row.row_std_mean_b = stats::mean(std_b);
        row.levene_p = or_nan([&] { return stats::levene({mean_a, mean_b}).p_value; });
        row.welch_p = or_nan([&] { return stats::welch_t(std_a, std_b).p_value; });
        row.pearson_r = or_nan([&] { return stats::pearson(mean_a, mean_b).statistic; });
        row.spearman_rho = or_nan([&] { return stats::spearman(mean_a, mean_b).statistic; });
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string judge_selection_csv(const std::vector<JudgeSelectionRow>& rows) {
  std::string out =
      "criterion,judge_a,judge_b,n,diversity_std_a,diversity_std_b,levene_p,row_std_mean_a,row_std_mean_b,welch_p,"
      "pearson_r,spearman_rho\n";
  for (const auto& r : rows) {
    out += r.criterion + "," + r.judge_a + "," + r.judge_b + "," + std::to_string(r.n) + "," + fixed(r.diversity_std_a) +
           "," + fixed(r.diversity_std_b) + "," + fixed(r.levene_p) + "," + fixed(r.row_std_mean_a) + "," +
           fixed(r.row_std_mean_b) + "," + fixed(r.welch_p) + "," + fixed(r.pearson_r) + "," + fixed(r.spearman_rho) +
           "\n";
  }
  return out;
}

}  // namespace detect::service
