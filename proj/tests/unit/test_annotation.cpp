#include "doctest.h"

#include <thread>

#include "detect/io.hpp"
#include "detect/service/annotation_api.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace detect;
using namespace detect::service;
using nlohmann::json;

namespace {

std::vector<Task> make_tasks(std::size_t records, std::size_t systems) {
  std::vector<Task> out;
  for (std::size_t r = 0; r < records; ++r) {
    for (std::size_t s = 0; s < systems; ++s) {
      out.push_back({"r" + std::to_string(r), "sys" + std::to_string(s), "Komplexer Satz " + std::to_string(r) + ".",
                     "Einfacher Satz " + std::to_string(s) + "."});
    }
  }
  return out;
}

AnnotationRecord rating(const std::string& who, const std::string& rec, const std::string& sys, double s, double m,
                        double f) {
  AnnotationRecord a;
  a.annotator_id = who;
  a.record_id = rec;
  a.system_id = sys;
  a.strategy_label = Strategy::del;
  a.scores = {s, m, f};
  return a;
}

ApiRequest req(std::string method, std::string path, std::string annotator = "ann1", json body = nullptr,
               std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  if (!annotator.empty()) r.headers["x-annotator-id"] = annotator;
  if (!body.is_null()) r.body = body.dump();
  r.query = std::move(query);
  return r;
}

json rating_body(const std::string& rec, const std::string& sys, double s, double m, double f,
                 const std::string& strategy = "delete") {
  return {{"record_id", rec},
          {"system_id", sys},
          {"strategy_label", strategy},
          {"scores", {{"simplicity", s}, {"meaning_preservation", m}, {"fluency", f}}}};
}

std::string error_code(const ApiResponse& r) { return r.body["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("store rejects duplicates and bad scores") {
  testing::TempDir tmp;
  AnnotationStore store(tmp / "journal.jsonl", 256, testing::fixed_clock);
  const auto a = store.add(rating("x", "r1", "s1", 80, 70, 60));
  CHECK(a.version == 1);
  CHECK(a.timestamp == testing::fixed_clock());
  CHECK_FALSE(a.rank_confirmed);
  try {
    store.add(rating("x", "r1", "s1", 10, 10, 10));
    FAIL("duplicate accepted");
  } catch (const ApiError& e) {
    CHECK(e.status() == 409);
    CHECK(e.code() == "duplicate_rating");
  }
  CHECK_NOTHROW(store.add(rating("y", "r1", "s1", 10, 10, 10)));
  try {
    store.add(rating("x", "r1", "s2", 101, 10, 10));
    FAIL("out-of-range accepted");
  } catch (const ApiError& e) {
    CHECK(e.status() == 422);
  }
  CHECK(store.size() == 2);
  CHECK(store.find("x", "r1", "s1")->scores == a.scores);
  CHECK_FALSE(store.find("x", "r1", "s2").has_value());
}

TEST_CASE("ranking confirmation is all-or-nothing") {
  testing::TempDir tmp;
  AnnotationStore store(tmp / "journal.jsonl", 256, testing::fixed_clock);
  store.add(rating("x", "r1", "s1", 80, 70, 60));
  store.add(rating("x", "r1", "s2", 50, 50, 50));
  const auto lines = store.journal_lines();

  auto expect = [&](const std::vector<Revision>& revs, int status, const std::string& code) {
    try {
      store.confirm("x", "r1", revs);
      FAIL("confirmation accepted");
    } catch (const ApiError& e) {
      CHECK(e.status() == status);
      CHECK(e.code() == code);
    }
    CHECK(store.journal_lines() == lines);
    CHECK(store.find("x", "r1", "s1")->version == 1);
    CHECK_FALSE(store.find("x", "r1", "s1")->rank_confirmed);
  };
  expect({{"s1", 1, llm::CriterionScores{90, 90, 90}, {}}, {"s2", 7, {}, {}}}, 409, "version_conflict");
  expect({{"s1", 1, {}, {}}, {"s2", 1, llm::CriterionScores{90, -1, 90}, {}}}, 422, "validation_failed");
  expect({{"s1", 1, {}, {}}, {"s9", 1, {}, {}}}, 404, "not_found");
  expect({{"s1", 1, {}, {}}, {"s1", 1, {}, {}}}, 400, "bad_request");
  expect({}, 400, "bad_request");

  const auto done = store.confirm("x", "r1", {{"s1", 1, llm::CriterionScores{90, 90, 90}, Strategy::split}, {"s2", 1, {}, {}}});
  CHECK(done.size() == 2);
  const auto s1 = *store.find("x", "r1", "s1");
  CHECK(s1.version == 2);
  CHECK(s1.rank_confirmed);
  CHECK(s1.scores == llm::CriterionScores{90, 90, 90});
  CHECK(s1.strategy_label == Strategy::split);
  CHECK(store.find("x", "r1", "s2")->scores == llm::CriterionScores{50, 50, 50});
  // Re-confirming with the old version is stale now.
  CHECK_THROWS_AS(store.confirm("x", "r1", {{"s1", 1, {}, {}}}), ApiError);
}

TEST_CASE("journal replay and compaction") {
  testing::TempDir tmp;
  {
    AnnotationStore store(tmp / "j.jsonl", 4, testing::fixed_clock);
    for (int i = 0; i < 3; ++i) store.add(rating("x", "r" + std::to_string(i), "s", 40, 40, 40));
    store.confirm("x", "r0", {{"s", 1, llm::CriterionScores{60, 60, 60}, {}}});  // 4th append compacts
    CHECK(store.journal_lines() == 3);
    store.confirm("x", "r0", {{"s", 2, llm::CriterionScores{70, 60, 60}, {}}});
    CHECK(store.journal_lines() == 4);
  }
  AnnotationStore replay(tmp / "j.jsonl");
  CHECK(replay.size() == 3);
  CHECK(replay.find("x", "r0", "s")->version == 3);
  CHECK(replay.find("x", "r0", "s")->scores.simplicity == 70);
  replay.compact();
  CHECK(replay.journal_lines() == 3);
  CHECK(load_annotations(tmp / "j.jsonl").size() == 3);

  write_file_atomic(tmp / "bad.jsonl", R"({"annotator_id": "x"})" "\n");
  CHECK_THROWS_AS(AnnotationStore(tmp / "bad.jsonl"), SchemaError);
}

TEST_CASE("api routes and errors") {
  testing::TempDir tmp;
  AnnotationStore store(tmp / "j.jsonl", 256, testing::fixed_clock);
  const AnnotationApi api(store, make_tasks(2, 2), 3);

  CHECK(api.handle(req("GET", "/v1/health", "")).status == 200);
  CHECK(api.handle(req("GET", "/v1/rubric", "")).body["rubric"].get<std::string>().find("Simplicity") != std::string::npos);
  CHECK(api.handle(req("GET", "/v1/nothing")).status == 404);
  const auto wrong = api.handle(req("DELETE", "/v1/ratings"));
  CHECK(wrong.status == 405);
  CHECK(error_code(wrong) == "method_not_allowed");

  const auto anon = api.handle(req("GET", "/v1/tasks", ""));
  CHECK(anon.status == 400);
  CHECK(error_code(anon) == "missing_annotator");
  const auto clash = api.handle(req("GET", "/v1/tasks", "ann1", nullptr, {{"annotator", "ann2"}}));
  CHECK(error_code(clash) == "annotator_mismatch");
  CHECK(api.handle(req("GET", "/v1/tasks", "", nullptr, {{"annotator", "ann2"}})).status == 200);

  auto tasks = api.handle(req("GET", "/v1/tasks"));
  CHECK(tasks.status == 200);
  CHECK(tasks.body["tasks"].size() == 3);
  CHECK(tasks.body["remaining"] == 4);
  CHECK(api.handle(req("GET", "/v1/tasks", "ann1", nullptr, {{"limit", "1"}})).body["tasks"].size() == 1);
  CHECK(api.handle(req("GET", "/v1/tasks", "ann1", nullptr, {{"limit", "many"}})).status == 400);

  ApiRequest garbage = req("POST", "/v1/ratings");
  garbage.body = "{not json";
  CHECK(error_code(api.handle(garbage)) == "bad_request");
  CHECK(api.handle(req("POST", "/v1/ratings", "ann1", json::array())).status == 400);
  const auto too_fluent = api.handle(req("POST", "/v1/ratings", "ann1", rating_body("r0", "sys0", 50, 50, 101)));
  CHECK(too_fluent.status == 422);
  CHECK(error_code(too_fluent) == "validation_failed");
  CHECK(api.handle(req("POST", "/v1/ratings", "ann1", rating_body("r0", "sys0", 50, 50, 50, "shorten"))).status == 422);
  json no_scores = rating_body("r0", "sys0", 1, 1, 1);
  no_scores.erase("scores");
  CHECK(api.handle(req("POST", "/v1/ratings", "ann1", no_scores)).status == 422);
  json string_score = rating_body("r0", "sys0", 1, 1, 1);
  string_score["scores"]["fluency"] = "high";
  CHECK(api.handle(req("POST", "/v1/ratings", "ann1", string_score)).status == 422);
  CHECK(error_code(api.handle(req("POST", "/v1/ratings", "ann1", rating_body("r9", "sys0", 1, 1, 1)))) == "unknown_task");
  json other = rating_body("r0", "sys0", 1, 1, 1);
  other["annotator_id"] = "ann2";
  CHECK(error_code(api.handle(req("POST", "/v1/ratings", "ann1", other))) == "annotator_mismatch");

  const auto created = api.handle(req("POST", "/v1/ratings", "ann1", rating_body("r0", "sys0", 80, 60, 90)));
  CHECK(created.status == 201);
  CHECK(created.body["version"] == 1);
  CHECK(created.body["total"].get<double>() == doctest::Approx(0.4 * 60 + 0.4 * 80 + 0.2 * 90));
  const auto dup = api.handle(req("POST", "/v1/ratings", "ann1", rating_body("r0", "sys0", 80, 60, 90)));
  CHECK(dup.status == 409);
  CHECK(error_code(dup) == "duplicate_rating");

  CHECK(api.handle(req("GET", "/v1/ranking")).status == 400);
  const auto progress = api.handle(req("GET", "/v1/progress"));
  CHECK(progress.body["rated"] == 1);
  CHECK(progress.body["remaining"] == 3);
  CHECK(progress.body["total_tasks"] == 4);

  CHECK(api.handle(req("POST", "/v1/ranking/confirm", "ann1", json{{"items", json::array()}})).status == 400);
  CHECK(api.handle(req("POST", "/v1/ranking/confirm", "ann1",
                       json{{"record_id", "r0"}, {"items", {{{"system_id", "sys0"}}}}}))
            .status == 400);  // version missing
  const auto stale = api.handle(req("POST", "/v1/ranking/confirm", "ann1",
                                    json{{"record_id", "r0"}, {"items", {{{"system_id", "sys0"}, {"version", 4}}}}}));
  CHECK(stale.status == 409);
  CHECK(error_code(stale) == "version_conflict");
  CHECK(api.handle(req("GET", "/v1/export")).body["records"].size() == 1);
}

TEST_CASE("scripted annotation session") {
  testing::TempDir tmp;
  AnnotationStore store(tmp / "j.jsonl", 256, testing::fixed_clock);
  const AnnotationApi api(store, make_tasks(2, 3), 5);
  std::set<std::pair<std::string, std::string>> served;
  const std::map<std::string, std::array<double, 3>> given = {
      {"sys0", {40, 40, 40}}, {"sys1", {90, 85, 80}}, {"sys2", {20, 95, 95}}};
  for (;;) {
    const auto batch = api.handle(req("GET", "/v1/tasks")).body;
    if (batch["tasks"].empty()) {
      CHECK(batch["remaining"] == 0);
      break;
    }
    for (const auto& t : batch["tasks"]) {
      const std::pair<std::string, std::string> key{t["record_id"], t["system_id"]};
      CHECK(served.insert(key).second);  // never served after being rated
      const auto& s = given.at(key.second);
      CHECK(api.handle(req("POST", "/v1/ratings", "ann1", rating_body(key.first, key.second, s[0], s[1], s[2]))).status == 201);
    }
  }
  CHECK(served.size() == 6);

  const auto ranking = api.handle(req("GET", "/v1/ranking", "ann1", nullptr, {{"record", "r1"}})).body;
  CHECK(ranking["complete"] == true);
  REQUIRE(ranking["items"].size() == 3);
  // sys1 total 86, sys0 40, sys2 gated to its minimum 20.
  CHECK(ranking["items"][0]["system_id"] == "sys1");
  CHECK(ranking["items"][1]["system_id"] == "sys0");
  CHECK(ranking["items"][2]["system_id"] == "sys2");
  CHECK(ranking["items"][2]["total"] == 20.0);

  json items = json::array();
  for (const auto& it : ranking["items"]) items.push_back({{"system_id", it["system_id"]}, {"version", it["version"]}});
  items[1]["scores"] = {{"simplicity", 45}, {"meaning_preservation", 40}, {"fluency", 40}};
  const auto ok = api.handle(req("POST", "/v1/ranking/confirm", "ann1", json{{"record_id", "r1"}, {"items", items}}));
  CHECK(ok.status == 200);
  CHECK(ok.body["items"].size() == 3);
  CHECK(store.find("ann1", "r1", "sys0")->scores.simplicity == 45);
  CHECK(api.handle(req("GET", "/v1/progress")).body["rank_confirmed"] == 3);
  // The same request again carries stale versions.
  CHECK(api.handle(req("POST", "/v1/ranking/confirm", "ann1", json{{"record_id", "r1"}, {"items", items}})).status == 409);
}

TEST_CASE("export matrices and import round trip") {
  std::vector<AnnotationRecord> records;
  SplitMix64 rng(5);
  for (const char* who : {"a", "b", "c"}) {
    for (int i = 0; i < 360; ++i) {
      auto r = rating(who, "r" + std::to_string(i / 3), "s" + std::to_string(i % 3), std::round(100 * rng.uniform()),
                      std::round(100 * rng.uniform()), std::round(100 * rng.uniform()));
      r.version = 1 + i % 2;
      r.timestamp = "t";
      records.push_back(r);
    }
  }
  records.pop_back();  // one missing cell
  const json doc = export_annotations(records);
  CHECK(doc["raters"] == json::array({"a", "b", "c"}));
  CHECK(doc["items"].size() == 360);
  CHECK(doc["criteria"] == json::array({"simplicity", "meaning_preservation", "fluency", "total"}));
  for (const char* m : {"simplicity", "meaning_preservation", "fluency", "total"}) {
    REQUIRE(doc["matrices"][m].size() == 3);
    for (const auto& row : doc["matrices"][m]) CHECK(row.size() == 360);
  }
  std::size_t nulls = 0;
  for (const auto& row : doc["matrices"]["total"]) {
    for (const auto& v : row) nulls += v.is_null();
  }
  CHECK(nulls == 1);

  auto back = import_annotations(json::parse(doc.dump()));
  auto sorted = records;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
    return std::tie(x.annotator_id, x.record_id, x.system_id) < std::tie(y.annotator_id, y.record_id, y.system_id);
  });
  std::sort(back.begin(), back.end(), [](const auto& x, const auto& y) {
    return std::tie(x.annotator_id, x.record_id, x.system_id) < std::tie(y.annotator_id, y.record_id, y.system_id);
  });
  CHECK(back == sorted);

  const auto m = rater_matrix(records, llm::Criterion::fluency);
  CHECK(m.matrix.raters() == 3);
  CHECK(m.matrix.items() == 360);
}

TEST_CASE("api over a real socket") {
  testing::TempDir tmp;
  AnnotationStore store(tmp / "j.jsonl", 256, testing::fixed_clock);
  const AnnotationApi api(store, make_tasks(1, 2), 5);
  httplib::Server server;
  api.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const httplib::Headers who = {{"X-Annotator-Id", "sock"}};
  auto health = client.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto posted = client.Post("/v1/ratings", who, rating_body("r0", "sys1", 70, 70, 70).dump(), "application/json");
  REQUIRE(posted);
  CHECK(posted->status == 201);
  auto tasks = client.Get("/v1/tasks", who);
  REQUIRE(tasks);
  const auto body = json::parse(tasks->body);
  CHECK(body["tasks"].size() == 1);
  CHECK(body["tasks"][0]["system_id"] == "sys0");
  auto bad = client.Post("/v1/ratings", who, rating_body("r0", "sys0", 70, 70, 101).dump(), "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  CHECK(tasks->get_header_value("Content-Type") == "application/json");

  server.stop();
  worker.join();
}
