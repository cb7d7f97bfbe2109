#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "skelsql/error.hpp"
#include "skelsql/llm.hpp"
#include "skelsql/network.hpp"

namespace skelsql {
namespace {

using nlohmann::json;

Prompt prompt_for(const std::string& question, const std::string& text = "") {
  Prompt p;
  p.question_text = question;
  p.text = text.empty() ? "-- Question: " + question + "\n-- SQL:\n" : text;
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no skelsql::Error thrown";
  return ErrorCode::kConfigError;
}

TEST(MockLlm, PlainScript) {
  MockLlm mock(std::vector<std::string>{"SELECT 1;", "SELECT 2"});
  EXPECT_EQ(mock.complete(prompt_for("a"), {}).raw_text, "SELECT 1;");
  EXPECT_EQ(mock.complete(prompt_for("b"), {}).raw_text, "SELECT 2");
  EXPECT_EQ(code_of([&] { mock.complete(prompt_for("c"), {}); }), ErrorCode::kScriptExhausted);
  EXPECT_EQ(mock.calls(), 3u);
}

TEST(MockLlm, PerQuestionScript) {
  MockLlm mock(std::map<std::string, std::vector<std::string>>{{"q1", {"A", "B"}}, {"q2", {"C"}}});
  EXPECT_EQ(mock.complete(prompt_for("q2"), {}).raw_text, "C");
  EXPECT_EQ(mock.complete(prompt_for("q1"), {}).raw_text, "A");
  EXPECT_EQ(mock.complete(prompt_for("q1"), {}).raw_text, "B");
  EXPECT_EQ(code_of([&] { mock.complete(prompt_for("q3"), {}); }), ErrorCode::kScriptExhausted);
}

TEST(CassetteKey, DependsOnPromptAndParams) {
  const auto p = prompt_for("q");
  CompletionParams params;
  const auto key = cassette_key(p, params);
  EXPECT_EQ(key.size(), 64u);
  EXPECT_EQ(key, cassette_key(p, params));
  params.model = "other";
  EXPECT_NE(key, cassette_key(p, params));
  EXPECT_NE(key, cassette_key(prompt_for("r"), {}));
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ReplayLlm, RecordThenReplay) {
  testing::TempDir dir;
  const auto cassette = dir / "run.jsonl";
  auto upstream = std::make_shared<MockLlm>(std::vector<std::string>{"SELECT 1;", "SELECT 2;"});
  {
    ReplayLlm recorder(cassette, upstream);
    EXPECT_FALSE(recorder.strict());
    EXPECT_EQ(recorder.complete(prompt_for("a"), {}).raw_text, "SELECT 1;");
    EXPECT_EQ(recorder.complete(prompt_for("a"), {}).raw_text, "SELECT 1;");  // served from memory
    EXPECT_EQ(recorder.complete(prompt_for("b"), {}).raw_text, "SELECT 2;");
  }
  EXPECT_EQ(upstream->calls(), 2u);

  const auto before = network_request_count();
  ReplayLlm replay(cassette);
  EXPECT_TRUE(replay.strict());
  EXPECT_EQ(replay.size(), 2u);
  const auto r = replay.complete(prompt_for("a"), {});
  EXPECT_EQ(r.raw_text, "SELECT 1;");
  EXPECT_EQ(r.backend, LlmBackend::kReplay);
  EXPECT_EQ(code_of([&] { replay.complete(prompt_for("zzz"), {}); }), ErrorCode::kCassetteMiss);
  EXPECT_EQ(network_request_count(), before);

  std::ifstream in(cassette);
  std::string line;
  std::getline(in, line);
  const auto entry = json::parse(line);
  EXPECT_EQ(entry["prompt_sha256"], sha256_hex(prompt_for("a").text));
  EXPECT_EQ(entry["params"]["model"], "text-davinci-003");
}

TEST(ReplayLlm, CorruptCassette) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.jsonl") << "{\"key\": 1}\n";
  EXPECT_EQ(code_of([&] { ReplayLlm r(dir / "bad.jsonl"); }), ErrorCode::kIoError);
}

TEST(HttpLlm, CredentialMissingBeforeNetwork) {
  ::unsetenv("LLM_API_KEY");
  HttpLlm llm(HttpLlmOptions{});
  const auto before = network_request_count();
  EXPECT_EQ(code_of([&] { llm.complete(prompt_for("q"), {}); }), ErrorCode::kCredentialMissing);
  EXPECT_EQ(network_request_count(), before);
}

// Loopback OpenAI-style completions endpoint.
class FakeCompletions {
 public:
  FakeCompletions() {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      int seen = max_in_flight_.load();
      while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      const int n = ++requests_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      --in_flight_;
      if (n <= fail_first_) {
        res.status = fail_status_;
        res.set_content("{\"error\": \"busy\"}", "application/json");
        return;
      }
      res.set_content(json{{"choices", {{{"text", " SELECT count(*) FROM singer"}}}}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeCompletions() {
    server_.stop();
    thread_.join();
  }

  HttpLlmOptions options() const {
    HttpLlmOptions o;
    o.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    o.api_key = "test-key";
    o.timeout = std::chrono::milliseconds(5000);
    o.backoff = std::chrono::milliseconds(1);
    o.max_retries = 2;
    return o;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  int fail_first_ = 0;
  int fail_status_ = 500;
  int delay_ms_ = 0;
  std::string last_auth_;
  std::string last_body_;
};

TEST(HttpLlm, PostsCompletionRequest) {
  FakeCompletions server;
  HttpLlm llm(server.options());
  const auto before = network_request_count();
  const auto r = llm.complete(prompt_for("How many singers?"), {});
  EXPECT_EQ(r.raw_text, " SELECT count(*) FROM singer");
  EXPECT_EQ(r.backend, LlmBackend::kHttp);
  EXPECT_EQ(server.last_auth_, "Bearer test-key");
  const auto body = json::parse(server.last_body_);
  EXPECT_EQ(body["model"], "text-davinci-003");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["prompt"], prompt_for("How many singers?").text);
  EXPECT_EQ(body["stop"], json({";", "-- Question"}));
  EXPECT_EQ(network_request_count(), before + 1);
}

TEST(HttpLlm, RetriesTransientFailures) {
  FakeCompletions server;
  server.fail_first_ = 2;
  server.fail_status_ = 429;
  HttpLlm llm(server.options());
  EXPECT_EQ(llm.complete(prompt_for("q"), {}).raw_text, " SELECT count(*) FROM singer");
  EXPECT_EQ(server.requests_.load(), 3);
}

TEST(HttpLlm, GivesUpAfterRetries) {
  FakeCompletions server;
  server.fail_first_ = 100;
  HttpLlm llm(server.options());
  EXPECT_EQ(code_of([&] { llm.complete(prompt_for("q"), {}); }), ErrorCode::kHttpError);
  EXPECT_EQ(server.requests_.load(), 3);
}

TEST(HttpLlm, ClientErrorsAreNotRetried) {
  FakeCompletions server;
  server.fail_first_ = 100;
  server.fail_status_ = 400;
  HttpLlm llm(server.options());
  EXPECT_EQ(code_of([&] { llm.complete(prompt_for("q"), {}); }), ErrorCode::kHttpError);
  EXPECT_EQ(server.requests_.load(), 1);
}

TEST(HttpLlm, BoundsRequestsInFlight) {
  FakeCompletions server;
  server.delay_ms_ = 30;
  auto options = server.options();
  options.max_in_flight = 2;
  HttpLlm llm(options);
  {
    std::vector<std::jthread> callers;
    for (int i = 0; i < 6; ++i) callers.emplace_back([&] { llm.complete(prompt_for("q"), {}); });
  }
  EXPECT_EQ(server.requests_.load(), 6);
  EXPECT_LE(server.max_in_flight_.load(), 2);
}

TEST(ExtractSql, Cases) {
  EXPECT_EQ(extract_sql("SELECT name FROM singer;"), "SELECT name FROM singer");
  EXPECT_EQ(extract_sql("I cannot generate SQL for this."), std::nullopt);
  EXPECT_EQ(extract_sql("```sql\nSELECT 1;\n```"), "SELECT 1");
  EXPECT_EQ(extract_sql(" select a FROM t WHERE b = 'x;y'; SELECT 2"), "select a FROM t WHERE b = 'x;y'");
  EXPECT_EQ(extract_sql("Here it is:\n  SELECT *\n  FROM t\n"), "SELECT *\n  FROM t");
  EXPECT_EQ(extract_sql("WITH x AS (SELECT 1) SELECT * FROM x;"), "WITH x AS (SELECT 1) SELECT * FROM x");
  EXPECT_EQ(extract_sql("SELEC *"), std::nullopt);
  EXPECT_EQ(extract_sql(""), std::nullopt);
  EXPECT_EQ(extract_sql("preselected"), std::nullopt);
}

}  // namespace
}  // namespace skelsql
