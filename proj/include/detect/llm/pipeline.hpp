#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/llm/chat.hpp"
#include "detect/llm/prompt.hpp"
#include "detect/llm/scores.hpp"
#include "json.hpp"

namespace detect::llm {

using ClientList = std::vector<std::shared_ptr<const ChatClient>>;

struct SystemOutput {
  std::string record_id;
  std::string system_id;  // endpoint name
  std::string text;
  friend bool operator==(const SystemOutput&, const SystemOutput&) = default;
};

struct GenerationFailure {
  std::string record_id;
  std::string system_id;
  std::string error;
};

struct GenerationOptions {
  std::string five_shot;  // empty -> the shipped block
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  std::vector<SystemOutput> outputs;  // ordered by (record, endpoint) as given
  std::vector<GenerationFailure> failures;
  std::vector<std::string> warnings;
};

// Removes leading "Ausgabe:"-style labels and wrapping quotes from a generated text.
std::string strip_boilerplate(std::string_view reply);

// One request per (record, endpoint); failures are recorded and the run continues.
// Throws InvalidArgument if the few-shot block lacks an example of some strategy.
GenerationResult generate_simplifications(const std::vector<SimplificationRecord>& records, const ClientList& endpoints,
                                          const PromptTemplate& tmpl, const GenerationOptions& options = {});

struct JudgePair {
  std::string record_id;
  std::string system_id;
  std::string complex;
  std::string simplification;
};

struct JudgeSample {
  std::string record_id;
  std::string system_id;
  std::string judge_model;  // endpoint name
  std::size_t run_index = 0;
  std::optional<CriterionScores> scores;  // absent unless parse_ok
  std::string feedback;                   // raw reply, or the endpoint error
  bool parse_ok = false;
  friend bool operator==(const JudgeSample&, const JudgeSample&) = default;
};

struct JudgeOptions {
  std::size_t n_runs = 10;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
};

// n_runs samples per (pair, judge), ordered by pair, then judge, then run. Each request's seed
// is derived from (options.seed, pair, judge, run), so results do not depend on scheduling.
std::vector<JudgeSample> run_judges(const std::vector<JudgePair>& pairs, const ClientList& judges,
                                    const PromptTemplate& tmpl, const JudgeOptions& options);

struct JudgeSummary {
  CriterionScores mean;
  CriterionScores row_std;  // sample std over runs (n-1); 0 with a single run
  std::size_t parsed = 0;
  std::size_t samples = 0;
};

struct PairAggregate {
  std::string record_id;
  std::string system_id;
  std::map<std::string, JudgeSummary> judges;  // judges with >= 1 parsed sample
  std::optional<CriterionScores> llm_judge;    // mean of per-judge means
  double llm_judge_total = 0.0;
  std::vector<std::string> warnings;

  bool scored() const { return llm_judge.has_value(); }
};

// Ordered by (record_id, system_id). Invariant under any reordering of the samples.
std::vector<PairAggregate> aggregate(const std::vector<JudgeSample>& samples);

// JSONL persistence.
nlohmann::json scores_to_json(const CriterionScores& s);
CriterionScores scores_from_json(const nlohmann::json& j);

std::string serialize_outputs(const std::vector<SystemOutput>& outputs);
std::vector<SystemOutput> parse_outputs(std::string_view jsonl);
std::string serialize_samples(const std::vector<JudgeSample>& samples);
std::vector<JudgeSample> parse_samples(std::string_view jsonl);
std::string serialize_aggregates(const std::vector<PairAggregate>& aggregates);
std::vector<PairAggregate> parse_aggregates(std::string_view jsonl);

}  // namespace detect::llm
