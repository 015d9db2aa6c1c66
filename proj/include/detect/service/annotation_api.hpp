#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/llm/pipeline.hpp"
#include "detect/service/annotation_store.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace detect::service {

struct Task {
  std::string record_id;
  std::string system_id;
  std::string complex;
  std::string simplification;
};

// One task per system output whose record is in `records`, in record order then output order.
std::vector<Task> build_tasks(const std::vector<SimplificationRecord>& records,
                              const std::vector<llm::SystemOutput>& outputs);

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// The /v1/ JSON API behind the annotation UI. handle() is the whole contract; mount() only
// adapts it to an HTTP server. The annotator is taken from the X-Annotator-Id header, the
// `annotator` query parameter or the body's annotator_id (all present ones must agree).
class AnnotationApi {
 public:
  AnnotationApi(AnnotationStore& store, std::vector<Task> tasks, std::size_t batch_size = 5);

  ApiResponse handle(const ApiRequest& request) const;
  void mount(httplib::Server& server) const;

  const std::vector<Task>& tasks() const { return tasks_; }

 private:
  ApiResponse get_tasks(const ApiRequest& r) const;
  ApiResponse post_rating(const ApiRequest& r) const;
  ApiResponse get_ranking(const ApiRequest& r) const;
  ApiResponse post_confirm(const ApiRequest& r) const;
  ApiResponse get_progress(const ApiRequest& r) const;
  ApiResponse get_export(const ApiRequest& r) const;
  const Task* find_task(const std::string& record_id, const std::string& system_id) const;

  AnnotationStore& store_;
  std::vector<Task> tasks_;
  std::size_t batch_size_;
  std::string rubric_;
};

// Export document: rater x item matrices per criterion and for the total, plus the records.
nlohmann::json export_annotations(const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> import_annotations(const nlohmann::json& exported);

}  // namespace detect::service
