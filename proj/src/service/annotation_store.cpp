#include "detect/service/annotation_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>

#include "detect/io.hpp"
#include "detect/llm/pipeline.hpp"
#include "detect/service/manifest.hpp"
#include "detect/text.hpp"

namespace detect::service {

nlohmann::ordered_json to_json(const AnnotationRecord& a) {
  nlohmann::ordered_json j;
  j["annotator_id"] = a.annotator_id;
  j["record_id"] = a.record_id;
  j["system_id"] = a.system_id;
  j["strategy_label"] = to_string(a.strategy_label);
  j["scores"] = llm::scores_to_json(a.scores);
  j["rank_confirmed"] = a.rank_confirmed;
  j["timestamp"] = a.timestamp;
  j["version"] = a.version;
  return j;
}

void validate_scores(const llm::CriterionScores& s) {
  for (llm::Criterion c : llm::kCriteria) {
    const double v = s[c];
    if (!(v >= 0.0 && v <= 100.0)) {
      throw ApiError(422, "validation_failed", std::string(llm::to_string(c)) + " must be within [0,100]");
    }
  }
}

namespace {

std::string required_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw ApiError(400, "bad_request", std::string("missing or empty field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

llm::CriterionScores scores_field(const nlohmann::json& j) {
  if (!j.is_object()) throw ApiError(400, "bad_request", "scores must be an object");
  llm::CriterionScores s;
  for (llm::Criterion c : llm::kCriteria) {
    const std::string key(llm::to_string(c));
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw ApiError(422, "validation_failed", key + " must be a number");
    }
    s[c] = j.at(key).get<double>();
  }
  validate_scores(s);
  return s;
}

Strategy strategy_field(const nlohmann::json& j) {
  if (!j.is_string()) throw ApiError(422, "validation_failed", "strategy_label must be split, delete or paraphrase");
  try {
    return parse_strategy(j.get<std::string>());
  } catch (const Error&) {
    throw ApiError(422, "validation_failed", "strategy_label must be split, delete or paraphrase");
  }
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ApiError(400, "bad_request", "annotation must be a JSON object");
  AnnotationRecord a;
  a.annotator_id = required_string(j, "annotator_id");
  a.record_id = required_string(j, "record_id");
  a.system_id = required_string(j, "system_id");
  if (!j.contains("strategy_label")) throw ApiError(422, "validation_failed", "strategy_label is required");
  a.strategy_label = strategy_field(j.at("strategy_label"));
  if (!j.contains("scores")) throw ApiError(422, "validation_failed", "scores are required");
  a.scores = scores_field(j.at("scores"));
  a.rank_confirmed = j.value("rank_confirmed", false);
  a.timestamp = j.value("timestamp", std::string());
  a.version = j.value("version", std::uint64_t{1});
  return a;
}

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl) {
  std::map<std::tuple<std::string, std::string, std::string>, AnnotationRecord> latest;
  std::size_t pos = 0, line = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view raw = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (text::trim(raw).empty()) continue;
    try {
      AnnotationRecord a = annotation_from_json(nlohmann::json::parse(raw));
      latest[{a.annotator_id, a.record_id, a.system_id}] = std::move(a);
    } catch (const ApiError& e) {
      throw SchemaError(e.what(), line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(e.what(), line);
    }
  }
  std::vector<AnnotationRecord> out;
  for (auto& [key, a] : latest) out.push_back(std::move(a));
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    return parse_annotations(data);
  } catch (const SchemaError& e) {
    throw SchemaError(e.message(), e.line(), path.string());
  }
}

RaterMatrix rater_matrix(const std::vector<AnnotationRecord>& records, std::optional<llm::Criterion> criterion) {
  std::set<std::string> raters;
  std::set<RatingItem> items;
  for (const auto& a : records) {
    raters.insert(a.annotator_id);
    items.insert({a.record_id, a.system_id});
  }
  RaterMatrix out{{raters.begin(), raters.end()}, {items.begin(), items.end()}, stats::RatingsMatrix(raters.size(), items.size())};
  for (const auto& a : records) {
    const auto r = static_cast<std::size_t>(std::lower_bound(out.raters.begin(), out.raters.end(), a.annotator_id) -
                                            out.raters.begin());
    const auto i = static_cast<std::size_t>(
        std::lower_bound(out.items.begin(), out.items.end(), RatingItem{a.record_id, a.system_id}) - out.items.begin());
    out.matrix.set(r, i, criterion ? a.scores[*criterion] : llm::total_score(a.scores));
  }
  return out;
}

// ---- store -----------------------------------------------------------------------------

AnnotationStore::AnnotationStore(std::filesystem::path journal, std::size_t compact_every, Clock clock)
    : journal_(std::move(journal)), compact_every_(std::max<std::size_t>(compact_every, 1)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_timestamp;
  if (journal_.has_parent_path()) std::filesystem::create_directories(journal_.parent_path());
  if (std::filesystem::exists(journal_)) {
    const std::string data = read_file(journal_);
    for (auto& a : parse_annotations(data)) records_[{a.annotator_id, a.record_id, a.system_id}] = std::move(a);
    lines_ = static_cast<std::size_t>(std::count(data.begin(), data.end(), '\n'));
  }
}

void AnnotationStore::append_locked(const AnnotationRecord& r) {
  {
    std::ofstream out(journal_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to " + journal_.string());
    out << to_json(r).dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed for " + journal_.string());
  }
  ++lines_;
  if (++appends_since_compact_ >= compact_every_) {
    std::string data;
    for (const auto& [key, a] : records_) data += to_json(a).dump() + "\n";
    write_file_atomic(journal_, data);
    lines_ = records_.size();
    appends_since_compact_ = 0;
  }
}

AnnotationRecord AnnotationStore::add(AnnotationRecord record) {
  validate_scores(record.scores);
  record.rank_confirmed = false;
  record.version = 1;
  record.timestamp = clock_();
  std::unique_lock lock(mutex_);
  const Key key{record.annotator_id, record.record_id, record.system_id};
  if (records_.count(key)) {
    throw ApiError(409, "duplicate_rating",
                   "annotator " + record.annotator_id + " already rated " + record.record_id + "/" + record.system_id);
  }
  records_.emplace(key, record);
  try {
    append_locked(record);
  } catch (...) {
    records_.erase(key);
    throw;
  }
  return record;
}

std::vector<AnnotationRecord> AnnotationStore::confirm(const std::string& annotator, const std::string& record_id,
                                                       const std::vector<Revision>& revisions) {
  if (revisions.empty()) throw ApiError(400, "bad_request", "ranking confirmation lists no systems");
  for (const auto& rev : revisions) {
    if (rev.scores) validate_scores(*rev.scores);
  }
  std::unique_lock lock(mutex_);
  std::vector<AnnotationRecord> updated;
  std::set<std::string> seen;
  for (const auto& rev : revisions) {
    if (!seen.insert(rev.system_id).second) throw ApiError(400, "bad_request", "system " + rev.system_id + " listed twice");
    const auto it = records_.find({annotator, record_id, rev.system_id});
    if (it == records_.end()) {
      throw ApiError(404, "not_found", "no rating by " + annotator + " for " + record_id + "/" + rev.system_id);
    }
    if (it->second.version != rev.version) {
      throw ApiError(409, "version_conflict", record_id + "/" + rev.system_id + " is at version " +
                                                  std::to_string(it->second.version) + ", not " +
                                                  std::to_string(rev.version));
    }
    AnnotationRecord next = it->second;
    if (rev.scores) next.scores = *rev.scores;
    if (rev.strategy_label) next.strategy_label = *rev.strategy_label;
    next.rank_confirmed = true;
    next.version += 1;
    next.timestamp = clock_();
    updated.push_back(std::move(next));
  }
  for (const auto& a : updated) {
    records_[{a.annotator_id, a.record_id, a.system_id}] = a;
    append_locked(a);
  }
  return updated;
}

std::optional<AnnotationRecord> AnnotationStore::find(const std::string& annotator, const std::string& record_id,
                                                      const std::string& system_id) const {
  std::shared_lock lock(mutex_);
  const auto it = records_.find({annotator, record_id, system_id});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<AnnotationRecord> AnnotationStore::by_annotator(const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationRecord> out;
  for (auto it = records_.lower_bound({annotator, "", ""}); it != records_.end() && std::get<0>(it->first) == annotator;
       ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<AnnotationRecord> AnnotationStore::all() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationRecord> out;
  for (const auto& [key, a] : records_) out.push_back(a);
  return out;
}

std::size_t AnnotationStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

void AnnotationStore::compact() {
  std::unique_lock lock(mutex_);
  std::string data;
  for (const auto& [key, a] : records_) data += to_json(a).dump() + "\n";
  write_file_atomic(journal_, data);
  lines_ = records_.size();
  appends_since_compact_ = 0;
}

std::size_t AnnotationStore::journal_lines() const {
  std::shared_lock lock(mutex_);
  return lines_;
}

}  // namespace detect::service
