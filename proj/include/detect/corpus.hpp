#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace detect {

class EmbeddingProvider;

enum class Strategy { split, del, paraphrase };
enum class CefrLevel { B1, A2 };
enum class MatchType { complex_b1_a2, complex_b1, b1_a2, complex_a2 };
enum class SplitAssignment { unassigned, train, test };

std::string_view to_string(Strategy s);
std::string_view to_string(CefrLevel l);
std::string_view to_string(MatchType m);
std::string_view to_string(SplitAssignment s);
Strategy parse_strategy(std::string_view s);
CefrLevel parse_level(std::string_view s);
MatchType parse_match_type(std::string_view s);

struct Reference {
  CefrLevel level;
  std::string text;
  friend bool operator==(const Reference&, const Reference&) = default;
};

struct SimplificationRecord {
  std::string id;
  std::string complex;
  std::vector<Reference> references;
  MatchType match_type = MatchType::complex_b1_a2;
  std::optional<Strategy> strategy;
  SplitAssignment split = SplitAssignment::unassigned;
  // Fields not covered by the schema, kept verbatim for round trips.
  nlohmann::json extra = nlohmann::json::object();

  // Reference used for strategy classification: A2 if present, else B1.
  const Reference& primary_reference() const;
  const Reference* reference(CefrLevel level) const;

  friend bool operator==(const SimplificationRecord&, const SimplificationRecord&) = default;
};

// Throws SchemaError when the structural invariants do not hold.
void validate(const SimplificationRecord& r);

struct LexicalStats {
  std::size_t num_words = 0;
  double avg_word_length = 0.0;
  std::size_t sentence_count = 0;
};

// split when the simplification has more sentences, else delete when it has fewer words,
// else paraphrase. Throws InvalidArgument only for blank text.
Strategy classify_strategy(std::string_view complex, std::string_view simplification);
LexicalStats lexical_stats(std::string_view text);

struct SplitResult {
  std::vector<SimplificationRecord> train;
  std::vector<SimplificationRecord> test;
  std::vector<std::string> warnings;
};

// Per (match_type, strategy) cell test counts; cells missing from the quota get no test records.
struct CellQuota {
  MatchType match_type;
  Strategy strategy;
  std::size_t test_count;
};

// Stratifies by (match_type, strategy). Test counts per cell are apportioned with largest
// remainders so the overall test size equals round(test_fraction * n) and every cell is
// within one record of its proportional share. Deterministic for a fixed seed, independent
// of input order.
SplitResult stratified_split(std::vector<SimplificationRecord> records, double test_fraction,
                             std::uint64_t seed);
SplitResult quota_split(std::vector<SimplificationRecord> records, const std::vector<CellQuota>& quotas,
                        std::uint64_t seed);

struct CandidatePair {
  std::string id;
  std::string complex;
  std::string simplification;
};

struct ScoredPair {
  CandidatePair pair;
  double score = 0.0;
  std::string error;  // set for failed pairs
};

struct FilterResult {
  std::vector<ScoredPair> kept;
  std::vector<ScoredPair> rejected;
  std::vector<ScoredPair> failed;
};

// Keeps a pair iff BERTScore precision of the simplification against the complex sentence
// reaches the threshold. Embedder failures route the pair to `failed`.
FilterResult filter_by_similarity(const std::vector<CandidatePair>& pairs,
                                  const EmbeddingProvider& embedder, double threshold);

// JSONL persistence. Loading validates every line and fails atomically.
std::vector<SimplificationRecord> load_records(const std::filesystem::path& path);
std::vector<SimplificationRecord> parse_records(std::string_view jsonl);
void save_records(const std::vector<SimplificationRecord>& records, const std::filesystem::path& path);
std::string serialize_records(const std::vector<SimplificationRecord>& records);

nlohmann::ordered_json to_json(const SimplificationRecord& r);
SimplificationRecord record_from_json(const nlohmann::json& j, std::size_t line = 0);

}  // namespace detect
