#include "detect/llm/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <tuple>

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/parallel.hpp"
#include "detect/stats.hpp"
#include "detect/text.hpp"

namespace detect::llm {

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

constexpr std::string_view kLabels[] = {"ausgabe:",  "output:",         "vereinfachte version:", "vereinfachter satz:",
                                        "vereinfachung:", "vereinfacht:", "simplified:",           "simplification:"};

std::string strip_quotes(std::string s) {
  static const std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"\xE2\x80\x9E", "\xE2\x80\x9C"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xC2\xBB", "\xC2\xAB"}};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.compare(0, open.size(), open) == 0 &&
        s.compare(s.size() - close.size(), close.size(), close) == 0) {
      const std::string inner = s.substr(open.size(), s.size() - open.size() - close.size());
      // Only unwrap when the quotes enclose the whole reply, not quoted words at both ends.
      if (inner.find(open) == std::string::npos && inner.find(close) == std::string::npos) return text::trim(inner);
    }
  }
  return s;
}

}  // namespace

std::string strip_boilerplate(std::string_view reply) {
  std::string s = text::trim(reply);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto label : kLabels) {
      if (starts_with_ci(s, label)) {
        s = text::trim(std::string_view(s).substr(label.size()));
        changed = true;
      }
    }
  }
  return strip_quotes(s);
}

GenerationResult generate_simplifications(const std::vector<SimplificationRecord>& records, const ClientList& endpoints,
                                          const PromptTemplate& tmpl, const GenerationOptions& options) {
  GenerationResult result;
  if (endpoints.empty()) {
    result.warnings.push_back("no generation endpoints configured; nothing generated");
    return result;
  }
  const std::string five_shot = options.five_shot.empty() ? default_few_shot_block() : options.five_shot;
  check_few_shot_balance(parse_few_shot(five_shot));

  const std::size_t n = records.size() * endpoints.size();
  std::vector<std::optional<std::string>> texts(n);
  std::vector<std::string> errors(n);
  for_each_index(n, options.concurrency, [&](std::size_t k) {
    const auto& record = records[k / endpoints.size()];
    const auto& client = *endpoints[k % endpoints.size()];
    ChatRequest request;
    request.messages.push_back({"user", render_prompt(tmpl, {{"five_shot", five_shot}, {"text", record.complex}})});
    request.seed = fnv1a64(record.id + '\x1f' + client.endpoint().name, options.seed);
    try {
      std::string text = strip_boilerplate(client.complete(request));
      if (text.empty()) {
        errors[k] = "empty response";
      } else {
        texts[k] = std::move(text);
      }
    } catch (const EndpointError& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < n; ++k) {
    const auto& record = records[k / endpoints.size()];
    const auto& name = endpoints[k % endpoints.size()]->endpoint().name;
    if (texts[k]) {
      result.outputs.push_back({record.id, name, *texts[k]});
    } else {
      result.failures.push_back({record.id, name, errors[k]});
    }
  }
  return result;
}

std::vector<JudgeSample> run_judges(const std::vector<JudgePair>& pairs, const ClientList& judges,
                                    const PromptTemplate& tmpl, const JudgeOptions& options) {
  if (options.n_runs == 0) throw InvalidArgument("run_judges: n_runs must be >= 1");
  const std::size_t per_pair = judges.size() * options.n_runs;
  std::vector<JudgeSample> out(pairs.size() * per_pair);
  for_each_index(out.size(), options.concurrency, [&](std::size_t k) {
    const auto& pair = pairs[k / per_pair];
    const auto& client = *judges[(k % per_pair) / options.n_runs];
    const std::size_t run = k % options.n_runs;
    JudgeSample& sample = out[k];
    sample.record_id = pair.record_id;
    sample.system_id = pair.system_id;
    sample.judge_model = client.endpoint().name;
    sample.run_index = run;

    ChatRequest request;
    request.messages.push_back(
        {"user", render_prompt(tmpl, {{"complex_sentence", pair.complex}, {"simplified_sentence", pair.simplification}})});
    request.seed = fnv1a64(pair.record_id + '\x1f' + pair.system_id + '\x1f' + client.endpoint().name + '\x1f' +
                               std::to_string(run),
                           options.seed);
    try {
      sample.feedback = client.complete(request);
      ParseResult parsed = parse_scores(sample.feedback);
      sample.parse_ok = parsed.ok();
      sample.scores = parsed.scores;
    } catch (const EndpointError& e) {
      sample.feedback = e.what();
    }
  });
  return out;
}

std::vector<PairAggregate> aggregate(const std::vector<JudgeSample>& samples) {
  using PairKey = std::pair<std::string, std::string>;
  // pair -> judge -> criterion -> parsed values; plus per-judge sample counts.
  std::map<PairKey, std::map<std::string, std::array<std::vector<double>, 3>>> values;
  std::map<PairKey, std::map<std::string, std::size_t>> counts;
  for (const auto& s : samples) {
    const PairKey key{s.record_id, s.system_id};
    ++counts[key][s.judge_model];
    auto& per_judge = values[key][s.judge_model];
    if (s.parse_ok && s.scores) {
      for (std::size_t c = 0; c < 3; ++c) per_judge[c].push_back((*s.scores)[kCriteria[c]]);
    }
  }

  std::vector<PairAggregate> out;
  for (auto& [key, judges] : values) {
    PairAggregate agg;
    agg.record_id = key.first;
    agg.system_id = key.second;
    for (auto& [judge, per_criterion] : judges) {
      if (per_criterion[0].empty()) {
        agg.warnings.push_back("judge " + judge + " has no parsed sample; excluded");
        continue;
      }
      JudgeSummary summary;
      summary.parsed = per_criterion[0].size();
      summary.samples = counts[key][judge];
      for (std::size_t c = 0; c < 3; ++c) {
        auto& v = per_criterion[c];
        std::sort(v.begin(), v.end());  // fixed summation order -> exact permutation invariance
        summary.mean[kCriteria[c]] = stats::mean(v);
        summary.row_std[kCriteria[c]] = stats::sample_std(v);
      }
      agg.judges.emplace(judge, summary);
    }
    if (!agg.judges.empty()) {
      CriterionScores combined;
      for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> means;
        for (const auto& [judge, summary] : agg.judges) means.push_back(summary.mean[kCriteria[c]]);
        combined[kCriteria[c]] = stats::mean(means);  // map order: judges sorted by name
      }
      agg.llm_judge = combined;
      agg.llm_judge_total = total_score(combined);
    } else {
      agg.warnings.push_back("no parsed samples; pair unscored");
    }
    out.push_back(std::move(agg));
  }
  return out;
}

// ---- JSONL -----------------------------------------------------------------------------

nlohmann::json scores_to_json(const CriterionScores& s) {
  return {{"simplicity", s.simplicity}, {"meaning_preservation", s.meaning_preservation}, {"fluency", s.fluency}};
}

CriterionScores scores_from_json(const nlohmann::json& j) {
  CriterionScores s;
  for (Criterion c : kCriteria) {
    const auto& v = j.at(std::string(to_string(c)));
    if (!v.is_number()) throw SchemaError(std::string(to_string(c)) + " must be a number");
    s[c] = v.get<double>();
  }
  return s;
}

namespace {

template <typename Fn>
void for_each_json_line(std::string_view jsonl, Fn&& fn) {
  std::size_t pos = 0, line = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view raw = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (text::trim(raw).empty()) continue;
    try {
      fn(nlohmann::json::parse(raw));
    } catch (const SchemaError& e) {
      throw SchemaError(e.message(), line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(e.what(), line);
    }
  }
}

template <typename T, typename Fn>
std::string to_jsonl(const std::vector<T>& items, Fn&& fn) {
  std::string out;
  for (const auto& item : items) {
    out += fn(item).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string serialize_outputs(const std::vector<SystemOutput>& outputs) {
  return to_jsonl(outputs, [](const SystemOutput& o) {
    nlohmann::ordered_json j;
    j["record_id"] = o.record_id;
    j["system_id"] = o.system_id;
    j["text"] = o.text;
    return j;
  });
}

std::vector<SystemOutput> parse_outputs(std::string_view jsonl) {
  std::vector<SystemOutput> out;
  for_each_json_line(jsonl, [&](const nlohmann::json& j) {
    out.push_back({j.at("record_id").get<std::string>(), j.at("system_id").get<std::string>(),
                   j.at("text").get<std::string>()});
  });
  return out;
}

std::string serialize_samples(const std::vector<JudgeSample>& samples) {
  return to_jsonl(samples, [](const JudgeSample& s) {
    nlohmann::ordered_json j;
    j["record_id"] = s.record_id;
    j["system_id"] = s.system_id;
    j["judge_model"] = s.judge_model;
    j["run_index"] = s.run_index;
    j["scores"] = s.scores ? nlohmann::ordered_json(scores_to_json(*s.scores)) : nlohmann::ordered_json(nullptr);
    j["feedback"] = s.feedback;
    j["parse_ok"] = s.parse_ok;
    return j;
  });
}

std::vector<JudgeSample> parse_samples(std::string_view jsonl) {
  std::vector<JudgeSample> out;
  for_each_json_line(jsonl, [&](const nlohmann::json& j) {
    JudgeSample s;
    s.record_id = j.at("record_id").get<std::string>();
    s.system_id = j.at("system_id").get<std::string>();
    s.judge_model = j.at("judge_model").get<std::string>();
    s.run_index = j.at("run_index").get<std::size_t>();
    s.feedback = j.value("feedback", std::string());
    s.parse_ok = j.at("parse_ok").get<bool>();
    const auto& scores = j.at("scores");
    if (s.parse_ok) {
      if (scores.is_null()) throw SchemaError("parse_ok sample without scores");
      s.scores = scores_from_json(scores);
      if (!s.scores->in_range()) throw SchemaError("scores outside [0,100]");
    } else if (!scores.is_null()) {
      throw SchemaError("failed sample must have null scores");
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::string serialize_aggregates(const std::vector<PairAggregate>& aggregates) {
  return to_jsonl(aggregates, [](const PairAggregate& a) {
    nlohmann::ordered_json j;
    j["record_id"] = a.record_id;
    j["system_id"] = a.system_id;
    j["llm_judge"] = a.llm_judge ? nlohmann::ordered_json(scores_to_json(*a.llm_judge)) : nlohmann::ordered_json(nullptr);
    j["llm_judge_total"] = a.llm_judge ? nlohmann::ordered_json(a.llm_judge_total) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json judges = nlohmann::ordered_json::object();
    for (const auto& [name, s] : a.judges) {
      judges[name] = {{"mean", scores_to_json(s.mean)},
                      {"row_std", scores_to_json(s.row_std)},
                      {"parsed", s.parsed},
                      {"samples", s.samples}};
    }
    j["judges"] = std::move(judges);
    j["warnings"] = a.warnings;
    return j;
  });
}

std::vector<PairAggregate> parse_aggregates(std::string_view jsonl) {
  std::vector<PairAggregate> out;
  for_each_json_line(jsonl, [&](const nlohmann::json& j) {
    PairAggregate a;
    a.record_id = j.at("record_id").get<std::string>();
    a.system_id = j.at("system_id").get<std::string>();
    if (!j.at("llm_judge").is_null()) {
      a.llm_judge = scores_from_json(j.at("llm_judge"));
      a.llm_judge_total = j.at("llm_judge_total").get<double>();
    }
    for (const auto& [name, s] : j.at("judges").items()) {
      JudgeSummary summary;
      summary.mean = scores_from_json(s.at("mean"));
      summary.row_std = scores_from_json(s.at("row_std"));
      summary.parsed = s.at("parsed").get<std::size_t>();
      summary.samples = s.at("samples").get<std::size_t>();
      a.judges.emplace(name, summary);
    }
    a.warnings = j.value("warnings", std::vector<std::string>{});
    out.push_back(std::move(a));
  });
  return out;
}

}  // namespace detect::llm
