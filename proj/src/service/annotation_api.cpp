#include "detect/service/annotation_api.hpp"

#include <algorithm>
#include <set>

#include "detect/llm/prompt.hpp"
#include "httplib.h"

namespace detect::service {

std::vector<Task> build_tasks(const std::vector<SimplificationRecord>& records,
                              const std::vector<llm::SystemOutput>& outputs) {
  std::map<std::string, std::vector<const llm::SystemOutput*>> by_record;
  for (const auto& o : outputs) by_record[o.record_id].push_back(&o);
  std::vector<Task> tasks;
  for (const auto& r : records) {
    const auto it = by_record.find(r.id);
    if (it == by_record.end()) continue;
    for (const auto* o : it->second) tasks.push_back({r.id, o->system_id, r.complex, o->text});
  }
  return tasks;
}

AnnotationApi::AnnotationApi(AnnotationStore& store, std::vector<Task> tasks, std::size_t batch_size)
    : store_(store), tasks_(std::move(tasks)), batch_size_(std::max<std::size_t>(batch_size, 1)), rubric_(llm::rubric_text()) {}

namespace {

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

nlohmann::json parse_body(const ApiRequest& r) {
  try {
    auto j = nlohmann::json::parse(r.body);
    if (!j.is_object()) throw ApiError(400, "bad_request", "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception&) {
    throw ApiError(400, "bad_request", "request body is not valid JSON");
  }
}

std::string query(const ApiRequest& r, const std::string& key) {
  const auto it = r.query.find(key);
  return it == r.query.end() ? std::string() : it->second;
}

std::string annotator_of(const ApiRequest& r, const nlohmann::json* body = nullptr) {
  std::set<std::string> ids;
  if (const auto it = r.headers.find("x-annotator-id"); it != r.headers.end() && !it->second.empty()) ids.insert(it->second);
  if (auto q = query(r, "annotator"); !q.empty()) ids.insert(q);
  if (body && body->contains("annotator_id") && (*body)["annotator_id"].is_string()) {
    const auto id = (*body)["annotator_id"].get<std::string>();
    if (!id.empty()) ids.insert(id);
  }
  if (ids.empty()) throw ApiError(400, "missing_annotator", "no annotator id (X-Annotator-Id header or annotator parameter)");
  if (ids.size() > 1) throw ApiError(400, "annotator_mismatch", "conflicting annotator ids in request");
  return *ids.begin();
}

nlohmann::json task_json(const Task& t) {
  return {{"record_id", t.record_id}, {"system_id", t.system_id}, {"complex", t.complex}, {"simplification", t.simplification}};
}

nlohmann::json rating_json(const AnnotationRecord& a) {
  nlohmann::json j = to_json(a);
  j["total"] = llm::total_score(a.scores);
  return j;
}

}  // namespace

const Task* AnnotationApi::find_task(const std::string& record_id, const std::string& system_id) const {
  for (const auto& t : tasks_) {
    if (t.record_id == record_id && t.system_id == system_id) return &t;
  }
  return nullptr;
}

ApiResponse AnnotationApi::handle(const ApiRequest& request) const {
  struct Route {
    const char* method;
    const char* path;
    ApiResponse (AnnotationApi::*fn)(const ApiRequest&) const;
  };
  static const Route routes[] = {
      {"GET", "/v1/tasks", &AnnotationApi::get_tasks},
      {"POST", "/v1/ratings", &AnnotationApi::post_rating},
      {"GET", "/v1/ranking", &AnnotationApi::get_ranking},
      {"POST", "/v1/ranking/confirm", &AnnotationApi::post_confirm},
      {"GET", "/v1/progress", &AnnotationApi::get_progress},
      {"GET", "/v1/export", &AnnotationApi::get_export},
  };
  try {
    if (request.path == "/v1/health") return {200, {{"status", "ok"}}};
    if (request.path == "/v1/rubric") return {200, {{"rubric", rubric_}}};
    bool path_known = false;
    for (const auto& route : routes) {
      if (request.path != route.path) continue;
      path_known = true;
      if (request.method == route.method) return (this->*route.fn)(request);
    }
    if (path_known) return error_response(405, "method_not_allowed", request.method + " not allowed on " + request.path);
    return error_response(404, "not_found", "no endpoint " + request.path);
  } catch (const ApiError& e) {
    return error_response(e.status(), e.code(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

ApiResponse AnnotationApi::get_tasks(const ApiRequest& r) const {
  const std::string annotator = annotator_of(r);
  std::size_t limit = batch_size_;
  if (auto l = query(r, "limit"); !l.empty()) {
    try {
      limit = std::clamp<std::size_t>(std::stoul(l), 1, 100);
    } catch (const std::exception&) {
      throw ApiError(400, "bad_request", "limit must be a positive integer");
    }
  }
  std::set<std::pair<std::string, std::string>> done;
  for (const auto& a : store_.by_annotator(annotator)) done.insert({a.record_id, a.system_id});
  nlohmann::json batch = nlohmann::json::array();
  std::size_t remaining = 0;
  for (const auto& t : tasks_) {
    if (done.count({t.record_id, t.system_id})) continue;
    ++remaining;
    if (batch.size() < limit) batch.push_back(task_json(t));
  }
  return {200, {{"annotator_id", annotator}, {"tasks", batch}, {"remaining", remaining}, {"rubric", rubric_}}};
}

ApiResponse AnnotationApi::post_rating(const ApiRequest& r) const {
  nlohmann::json body = parse_body(r);
  body["annotator_id"] = annotator_of(r, &body);
  AnnotationRecord a = annotation_from_json(body);
  if (!find_task(a.record_id, a.system_id)) {
    throw ApiError(404, "unknown_task", "no task " + a.record_id + "/" + a.system_id);
  }
  return {201, rating_json(store_.add(std::move(a)))};
}

ApiResponse AnnotationApi::get_ranking(const ApiRequest& r) const {
  const std::string annotator = annotator_of(r);
  const std::string record = query(r, "record");
  if (record.empty()) throw ApiError(400, "bad_request", "record parameter is required");
  std::vector<AnnotationRecord> rated;
  for (auto& a : store_.by_annotator(annotator)) {
    if (a.record_id == record) rated.push_back(std::move(a));
  }
  std::stable_sort(rated.begin(), rated.end(), [](const AnnotationRecord& x, const AnnotationRecord& y) {
    const double tx = llm::total_score(x.scores), ty = llm::total_score(y.scores);
    return tx != ty ? tx > ty : x.system_id < y.system_id;
  });
  std::size_t systems = 0;
  for (const auto& t : tasks_) systems += t.record_id == record;
  nlohmann::json items = nlohmann::json::array();
  for (const auto& a : rated) items.push_back(rating_json(a));
  return {200, {{"annotator_id", annotator}, {"record_id", record}, {"items", items},
                {"complete", systems > 0 && rated.size() == systems}}};
}

ApiResponse AnnotationApi::post_confirm(const ApiRequest& r) const {
  const nlohmann::json body = parse_body(r);
  const std::string annotator = annotator_of(r, &body);
  if (!body.contains("record_id") || !body["record_id"].is_string()) {
    throw ApiError(400, "bad_request", "record_id is required");
  }
  if (!body.contains("items") || !body["items"].is_array()) throw ApiError(400, "bad_request", "items must be an array");
  std::vector<Revision> revisions;
  for (const auto& item : body["items"]) {
    if (!item.is_object() || !item.contains("system_id") || !item["system_id"].is_string()) {
      throw ApiError(400, "bad_request", "each item needs a system_id");
    }
    if (!item.contains("version") || !item["version"].is_number_unsigned()) {
      throw ApiError(400, "bad_request", "each item needs the version it was read at");
    }
    Revision rev;
    rev.system_id = item["system_id"].get<std::string>();
    rev.version = item["version"].get<std::uint64_t>();
    if (item.contains("scores")) rev.scores = scores_field(item["scores"]);
    if (item.contains("strategy_label")) rev.strategy_label = strategy_field(item["strategy_label"]);
    revisions.push_back(std::move(rev));
  }
  const auto updated = store_.confirm(annotator, body["record_id"].get<std::string>(), revisions);
  nlohmann::json items = nlohmann::json::array();
  for (const auto& a : updated) items.push_back(rating_json(a));
  return {200, {{"annotator_id", annotator}, {"record_id", body["record_id"]}, {"items", items}}};
}

ApiResponse AnnotationApi::get_progress(const ApiRequest& r) const {
  const std::string annotator = annotator_of(r);
  const auto rated = store_.by_annotator(annotator);
  const auto confirmed = static_cast<std::size_t>(
      std::count_if(rated.begin(), rated.end(), [](const AnnotationRecord& a) { return a.rank_confirmed; }));
  return {200, {{"annotator_id", annotator}, {"total_tasks", tasks_.size()}, {"rated", rated.size()},
                {"rank_confirmed", confirmed}, {"remaining", tasks_.size() - std::min(rated.size(), tasks_.size())}}};
}

ApiResponse AnnotationApi::get_export(const ApiRequest&) const { return {200, export_annotations(store_.all())}; }

void AnnotationApi::mount(httplib::Server& server) const {
  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      r.headers.emplace(key, v);
    }
    r.body = req.body;
    const ApiResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/v1/.*)", adapt);
  server.Post(R"(/v1/.*)", adapt);
  server.Put(R"(/v1/.*)", adapt);
  server.Delete(R"(/v1/.*)", adapt);
}

nlohmann::json export_annotations(const std::vector<AnnotationRecord>& records) {
  nlohmann::json matrices = nlohmann::json::object();
  RaterMatrix layout = rater_matrix(records, std::nullopt);
  auto dump = [](const RaterMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.matrix.raters(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t i = 0; i < m.matrix.items(); ++i) {
        const double v = m.matrix(r, i);
        row.push_back(stats::RatingsMatrix::is_missing(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json criteria = nlohmann::json::array();
  for (llm::Criterion c : llm::kCriteria) {
    criteria.push_back(llm::to_string(c));
    matrices[std::string(llm::to_string(c))] = dump(rater_matrix(records, c));
  }
  criteria.push_back("total");
  matrices["total"] = dump(layout);
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : layout.items) items.push_back({{"record_id", it.record_id}, {"system_id", it.system_id}});
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& a : records) recs.push_back(nlohmann::json(to_json(a)));
  return {{"criteria", criteria}, {"raters", layout.raters}, {"items", items}, {"matrices", matrices}, {"records", recs}};
}

std::vector<AnnotationRecord> import_annotations(const nlohmann::json& exported) {
  std::vector<AnnotationRecord> out;
  for (const auto& r : exported.at("records")) out.push_back(annotation_from_json(r));
  return out;
}

}  // namespace detect::service
