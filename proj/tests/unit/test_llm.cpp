#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

#include "detect/error.hpp"
#include "detect/llm/chat.hpp"
#include "detect/llm/pipeline.hpp"
#include "detect/llm/prompt.hpp"
#include "detect/llm/scores.hpp"
#include "httplib.h"
#include "judge_fuzz.hpp"
#include "support.hpp"

using namespace detect;
using namespace detect::llm;

TEST_CASE("total score formula") {
  CHECK(total_score({90, 50, 100}) == doctest::Approx(0.4 * 50 + 0.4 * 90 + 0.2 * 100));
  CHECK(total_score({90, 24, 100}) == 24.0);
  CHECK(total_score({25, 25, 25}) == doctest::Approx(25.0));
  CHECK(total_score({0, 100, 100}) == 0.0);
  CHECK(total_score({24.5, 100, 100}) == 24.5);
}

TEST_CASE("worked score blocks in the shipped judge prompt parse") {
  const std::string body = judge_final_template().body;
  const CriterionScores expected[] = {{90, 50, 100}, {85, 75, 95}, {80, 70, 50}, {85, 50, 80}, {50, 25, 25}};
  for (int k = 1; k <= 5; ++k) {
    const auto begin = body.find("Example " + std::to_string(k) + ":");
    const auto end = k < 5 ? body.find("Example " + std::to_string(k + 1) + ":") : body.find("Now grade");
    REQUIRE(begin != std::string::npos);
    const auto parsed = parse_scores(std::string_view(body).substr(begin, end - begin));
    REQUIRE(parsed.ok());
    CHECK(*parsed.scores == expected[k - 1]);
  }
}

TEST_CASE("judge reply fuzz corpus: no silent misparse") {
  const auto corpus = testing::judge_fuzz_corpus();
  CHECK(corpus.size() == 50);
  for (const auto& c : corpus) {
    CAPTURE(c.name);
    const auto r = parse_scores(c.reply);
    if (c.expected) {
      REQUIRE(r.ok());
      CHECK(*r.scores == *c.expected);
    } else {
      CHECK_FALSE(r.ok());
      CHECK_FALSE(r.error.empty());
    }
  }
}

TEST_CASE("format_scores round trips through the parser") {
  const CriterionScores s{12.5, 100, 0};
  CHECK(*parse_scores(format_scores(s)).scores == s);
}

TEST_CASE("prompt rendering") {
  const auto t = load_template(TemplateId::judge_final, "test", "A {complex_sentence} B {simplified_sentence} {X}");
  CHECK(t.slots == std::vector<std::string>{"complex_sentence", "simplified_sentence"});
  CHECK(render_prompt(t, {{"complex_sentence", "c"}, {"simplified_sentence", "{simplified_sentence}"}, {"extra", "?"}}) ==
        "A c B {simplified_sentence} {X}");
  CHECK_THROWS_AS(render_prompt(t, {{"complex_sentence", "c"}}), InvalidArgument);
  CHECK(t.checksum() == sha256_hex(t.body));
}

TEST_CASE("shipped templates") {
  const auto& gen = ats_generation_template();
  const auto& judge = judge_final_template();
  CHECK(std::find(gen.slots.begin(), gen.slots.end(), "five_shot") != gen.slots.end());
  CHECK(std::find(gen.slots.begin(), gen.slots.end(), "text") != gen.slots.end());
  CHECK(judge.body.find("{X}") != std::string::npos);  // output-format placeholders stay literal
  const std::string rendered = render_prompt(judge, {{"complex_sentence", "K"}, {"simplified_sentence", "S"}});
  CHECK(rendered.find("Complex: K\n\nSimplification: S") != std::string::npos);
  const std::string rubric = rubric_text();
  CHECK(rubric.find("Simplicity") != std::string::npos);
  CHECK(rubric.find("Fluency") != std::string::npos);
  CHECK(rubric.find("Example 1") == std::string::npos);
}

TEST_CASE("few-shot block covers every strategy") {
  const auto ex = parse_few_shot(default_few_shot_block());
  CHECK(ex.size() >= 3);
  CHECK_NOTHROW(check_few_shot_balance(ex));
  CHECK(parse_few_shot(format_few_shot(ex)).size() == ex.size());
  CHECK_THROWS_AS(check_few_shot_balance({ex.front()}), InvalidArgument);
}

TEST_CASE("boilerplate stripping") {
  CHECK(strip_boilerplate("Ausgabe: Der Hund bellt.") == "Der Hund bellt.");
  CHECK(strip_boilerplate("  output:  \"Der Hund bellt.\" ") == "Der Hund bellt.");
  CHECK(strip_boilerplate("Vereinfachte Version: Ausgabe: „Text.“") == "Text.");
  CHECK(strip_boilerplate("\"Hund\" und \"Katze\"") == "\"Hund\" und \"Katze\"");
  CHECK(strip_boilerplate("Der Ausgabe: bleibt") == "Der Ausgabe: bleibt");
}

TEST_CASE("endpoint config") {
  auto e = endpoint_from_json({{"name", "llama-3.1"}, {"base_url", "http://x"}, {"model_id", "m"}, {"timeout_seconds", 5}});
  CHECK(e.timeout.count() == 5);
  CHECK(e.key_variable() == "DETECT_API_KEY_LLAMA_3_1");
  e.api_key_env = "MY_KEY";
  CHECK(e.key_variable() == "MY_KEY");
  CHECK(endpoint_from_json(to_json(e)).name == e.name);
  e.temperature = -1;
  CHECK_THROWS_AS(e.validate(), InvalidArgument);
}

TEST_CASE("mock client is deterministic and answers both prompt kinds") {
  const MockChatClient a(testing::mock_endpoint("a")), b(testing::mock_endpoint("b"));
  ChatRequest judge;
  judge.messages.push_back(
      {"user", render_prompt(judge_final_template(), {{"complex_sentence", "Der lange komplizierte Satz, der viel erklärt."},
                                                      {"simplified_sentence", "Ein kurzer Satz."}})});
  judge.seed = 3;
  const auto r1 = a.complete(judge);
  CHECK(r1 == a.complete(judge));
  CHECK(parse_scores(r1).ok());
  CHECK(parse_scores(b.complete(judge)).ok());

  ChatRequest gen;
  gen.messages.push_back({"user", render_prompt(ats_generation_template(),
                                                {{"five_shot", default_few_shot_block()},
                                                 {"text", "Die Stadt plante, nachdem es Beschwerden gab, neue Radwege."}})});
  const auto out = strip_boilerplate(a.complete(gen));
  CHECK_FALSE(out.empty());
  CHECK(out == strip_boilerplate(a.complete(gen)));
}

namespace {

struct FakeProvider {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> calls{0};
  std::atomic<int> fail_first{0};
  int fail_status = 503;
  std::string last_auth;
  nlohmann::json last_body;

  FakeProvider() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls;
      last_auth = req.get_header_value("Authorization");
      last_body = nlohmann::json::parse(req.body);
      if (n <= fail_first) {
        res.status = fail_status;
        return;
      }
      nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Score:\n- Simplicity: 70\n"
                                                                                          "- Meaning Preservation: 60\n- Fluency: 90"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeProvider() {
    server.stop();
    thread.join();
  }
  ChatEndpoint endpoint() const {
    ChatEndpoint e;
    e.name = "fake";
    e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    e.model_id = "fake-model";
    e.max_retries = 2;
    e.timeout = std::chrono::seconds(5);
    e.api_key_env = "DETECT_TEST_FAKE_KEY";
    return e;
  }
};

}  // namespace

TEST_CASE("HTTP chat client speaks the chat-completions protocol") {
  FakeProvider fake;
  ::setenv("DETECT_TEST_FAKE_KEY", "sekret", 1);
  const HttpChatClient client(fake.endpoint());
  ChatRequest req;
  req.messages.push_back({"user", "hallo"});
  req.seed = 17;
  const auto reply = client.complete(req);
  CHECK(parse_scores(reply).ok());
  CHECK(fake.last_auth == "Bearer sekret");
  CHECK(fake.last_body["model"] == "fake-model");
  CHECK(fake.last_body["seed"] == 17);
  CHECK(fake.last_body["temperature"] == doctest::Approx(0.6));
  CHECK(fake.last_body["top_p"] == doctest::Approx(0.95));
  CHECK(fake.last_body["messages"][0]["content"] == "hallo");
  ::unsetenv("DETECT_TEST_FAKE_KEY");
}

TEST_CASE("HTTP chat client retries transient failures only") {
  {
    FakeProvider fake;
    fake.fail_first = 2;
    const HttpChatClient client(fake.endpoint());
    CHECK_NOTHROW(client.complete({{{"user", "x"}}, 0}));
    CHECK(fake.calls == 3);
  }
  {
    FakeProvider fake;
    fake.fail_first = 5;
    fake.fail_status = 400;
    const HttpChatClient client(fake.endpoint());
    CHECK_THROWS_AS(client.complete({{{"user", "x"}}, 0}), EndpointError);
    CHECK(fake.calls == 1);
  }
  {
    auto e = FakeProvider().endpoint();  // server gone: connection refused
    e.max_retries = 0;
    CHECK_THROWS_AS(HttpChatClient(e).complete({{{"user", "x"}}, 0}), EndpointError);
  }
  CHECK(HttpChatClient::reply_text({{"choices", {{{"message", {{"content", "ok"}}}}}}}) == "ok");
  CHECK_THROWS(HttpChatClient::reply_text({{"choices", nlohmann::json::array()}}));
}

namespace {

std::vector<SimplificationRecord> few_records() {
  return {testing::make_record("r1", MatchType::complex_b1_a2, Strategy::split, 0),
          testing::make_record("r2", MatchType::complex_a2, Strategy::del, 1),
          testing::make_record("r3", MatchType::b1_a2, Strategy::paraphrase, 2)};
}

ClientList mocks(std::initializer_list<const char*> names) {
  ClientList out;
  for (const char* n : names) out.push_back(std::make_shared<MockChatClient>(testing::mock_endpoint(n)));
  return out;
}

}  // namespace

TEST_CASE("generation: one output per record and endpoint, failures recorded") {
  ClientList clients = mocks({"a", "b"});
  clients.push_back(std::make_shared<MockChatClient>(testing::mock_endpoint("broken"), [](const ChatEndpoint&, const ChatRequest& r) -> std::string {
    if (r.messages.back().content.find("Das Institut") != std::string::npos) throw EndpointError("boom");
    return "Ausgabe:   ";
  }));
  GenerationOptions opt;
  opt.seed = 5;
  const auto res = generate_simplifications(few_records(), clients, ats_generation_template(), opt);
  CHECK(res.outputs.size() == 6);
  CHECK(res.failures.size() == 3);
  CHECK(res.outputs.front().record_id == "r1");
  CHECK(res.outputs.front().system_id == "a");
  for (const auto& o : res.outputs) CHECK(o.text.rfind("Ausgabe", 0) == std::string::npos);

  opt.concurrency = 1;
  const auto serial = generate_simplifications(few_records(), clients, ats_generation_template(), opt);
  CHECK(serial.outputs == res.outputs);

  CHECK(generate_simplifications(few_records(), {}, ats_generation_template(), opt).warnings.size() == 1);
  opt.five_shot = "Eingabe: Ein Satz.\nAusgabe: Ein Satz.";
  CHECK_THROWS_AS(generate_simplifications(few_records(), clients, ats_generation_template(), opt), InvalidArgument);
}

TEST_CASE("judging: ordering, scheduling independence, unparseable replies") {
  std::vector<JudgePair> pairs;
  for (const auto& r : few_records()) pairs.push_back({r.id, "sys", r.complex, r.primary_reference().text});
  ClientList judges = mocks({"j1", "j2"});
  judges.push_back(std::make_shared<MockChatClient>(testing::mock_endpoint("j3"),
                                                    [](const ChatEndpoint&, const ChatRequest&) { return std::string("I refuse."); }));
  const auto a = run_judges(pairs, judges, judge_final_template(), {3, 8, 11});
  const auto b = run_judges(pairs, judges, judge_final_template(), {3, 1, 11});
  REQUIRE(a.size() == 3 * 3 * 3);
  CHECK(a == b);
  CHECK(a[0].judge_model == "j1");
  CHECK(a[2].run_index == 2);
  CHECK(a[3].judge_model == "j2");
  CHECK_FALSE(a[6].parse_ok);
  CHECK(a[6].feedback == "I refuse.");
  const auto c = run_judges(pairs, judges, judge_final_template(), {3, 8, 12});
  CHECK(c != a);
  CHECK_THROWS_AS(run_judges(pairs, judges, judge_final_template(), {0, 1, 0}), InvalidArgument);
}

TEST_CASE("aggregation") {
  auto sample = [](std::string judge, std::size_t run, std::optional<CriterionScores> s) {
    JudgeSample j;
    j.record_id = "r";
    j.system_id = "s";
    j.judge_model = std::move(judge);
    j.run_index = run;
    j.scores = s;
    j.parse_ok = s.has_value();
    return j;
  };
  std::vector<JudgeSample> samples = {
      sample("a", 0, CriterionScores{80, 60, 90}), sample("a", 1, CriterionScores{90, 70, 100}),
      sample("b", 0, CriterionScores{50, 50, 50}), sample("b", 1, std::nullopt),
      sample("c", 0, std::nullopt),
  };
  const auto agg = aggregate(samples);
  REQUIRE(agg.size() == 1);
  const auto& p = agg.front();
  CHECK(p.judges.size() == 2);
  CHECK(p.judges.at("a").mean == CriterionScores{85, 65, 95});
  CHECK(p.judges.at("a").row_std.simplicity == doctest::Approx(std::sqrt(50.0)));
  CHECK(p.judges.at("b").row_std.simplicity == 0.0);
  CHECK(p.judges.at("b").parsed == 1);
  CHECK(p.judges.at("b").samples == 2);
  REQUIRE(p.scored());
  CHECK(p.llm_judge->simplicity == doctest::Approx(67.5));
  CHECK(p.llm_judge_total == doctest::Approx(total_score(*p.llm_judge)));
  CHECK_FALSE(p.warnings.empty());

  // permutation invariance, bit for bit
  std::mt19937 g(1);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(samples.begin(), samples.end(), g);
    const auto again = aggregate(samples);
    CHECK(again.front().llm_judge == p.llm_judge);
    CHECK(again.front().judges.at("a").row_std == p.judges.at("a").row_std);
  }

  const auto none = aggregate({sample("c", 0, std::nullopt)});
  CHECK_FALSE(none.front().scored());
}

TEST_CASE("pipeline artifacts round trip") {
  const std::vector<SystemOutput> outs = {{"r1", "a", "Text \"eins\"."}, {"r2", "b", "Zwei\nZeilen"}};
  CHECK(parse_outputs(serialize_outputs(outs)) == outs);
  std::vector<JudgePair> pairs = {{"r1", "a", "Komplex.", "Einfach."}};
  const auto samples = run_judges(pairs, mocks({"j1"}), judge_final_template(), {2, 1, 0});
  CHECK(parse_samples(serialize_samples(samples)) == samples);
  const auto agg = aggregate(samples);
  const auto back = parse_aggregates(serialize_aggregates(agg));
  REQUIRE(back.size() == 1);
  CHECK(back[0].llm_judge == agg[0].llm_judge);
  CHECK(back[0].judges.at("j1").row_std == agg[0].judges.at("j1").row_std);
  try {
    parse_outputs(serialize_outputs(outs) + "{\"record_id\": 1}\n");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 3);
  }
}
