#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/error.hpp"
#include "detect/llm/scores.hpp"
#include "detect/stats.hpp"
#include "json.hpp"

namespace detect::service {

// API failure with an HTTP status and a machine-readable code.
class ApiError : public Error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

struct AnnotationRecord {
  std::string annotator_id;
  std::string record_id;
  std::string system_id;
  Strategy strategy_label = Strategy::paraphrase;
  llm::CriterionScores scores;
  bool rank_confirmed = false;
  std::string timestamp;
  std::uint64_t version = 1;  // bumped on every change; clients echo it back on revisions

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

nlohmann::ordered_json to_json(const AnnotationRecord& a);
// Throws ApiError(400 bad_request / 422 validation_failed).
AnnotationRecord annotation_from_json(const nlohmann::json& j);
void validate_scores(const llm::CriterionScores& s);
// Field readers shared with the HTTP layer; same error contract.
llm::CriterionScores scores_field(const nlohmann::json& j);
Strategy strategy_field(const nlohmann::json& j);

// Latest line per (annotator, record, system) wins, so journals and exports both load.
std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

struct RatingItem {
  std::string record_id;
  std::string system_id;
  friend auto operator<=>(const RatingItem&, const RatingItem&) = default;
};

// Raters (sorted annotator ids) x items (sorted) for one criterion, or the total score when
// criterion is empty. Unrated cells are missing.
struct RaterMatrix {
  std::vector<std::string> raters;
  std::vector<RatingItem> items;
  stats::RatingsMatrix matrix;
};
RaterMatrix rater_matrix(const std::vector<AnnotationRecord>& records, std::optional<llm::Criterion> criterion);

struct Revision {
  std::string system_id;
  std::uint64_t version = 0;
  std::optional<llm::CriterionScores> scores;
  std::optional<Strategy> strategy_label;
};

// Append-only JSONL journal, compacted to one line per annotation every `compact_every`
// appends. Writers are serialized; readers share a lock.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  explicit AnnotationStore(std::filesystem::path journal, std::size_t compact_every = 256, Clock clock = {});

  // 409 duplicate_rating when this annotator already rated the pair.
  AnnotationRecord add(AnnotationRecord record);
  // Confirms the ranking pass for one record, applying revisions. All-or-nothing: any stale
  // version gives 409 version_conflict, any invalid revision 422, and nothing is written.
  std::vector<AnnotationRecord> confirm(const std::string& annotator, const std::string& record_id,
                                        const std::vector<Revision>& revisions);

  std::optional<AnnotationRecord> find(const std::string& annotator, const std::string& record_id,
                                       const std::string& system_id) const;
  std::vector<AnnotationRecord> by_annotator(const std::string& annotator) const;
  std::vector<AnnotationRecord> all() const;  // sorted by (annotator, record, system)
  std::size_t size() const;

  void compact();
  std::size_t journal_lines() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  void append_locked(const AnnotationRecord& r);

  std::filesystem::path journal_;
  std::size_t compact_every_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<Key, AnnotationRecord> records_;
  std::size_t lines_ = 0;
  std::size_t appends_since_compact_ = 0;
};

}  // namespace detect::service
