#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelsql/prompt.hpp"

namespace skelsql {

struct CompletionParams {
  std::string model = "text-davinci-003";
  double temperature = 0.0;
  std::size_t max_tokens = 256;
  std::vector<std::string> stop = {";", "-- Question"};
};

nlohmann::json to_json(const CompletionParams& params);

enum class LlmBackend { kMock, kReplay, kHttp };
std::string_view to_string(LlmBackend backend) noexcept;

struct CompletionResult {
  std::string raw_text;
  std::chrono::microseconds latency{0};
  LlmBackend backend = LlmBackend::kMock;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual CompletionResult complete(const Prompt& prompt, const CompletionParams& params) = 0;
};

/// Scripted responses. With a plain script every call pops the next response;
/// with a per-question script the queue is chosen by the prompt's question
/// text, which keeps concurrent evaluation deterministic.
class MockLlm final : public LlmClient {
 public:
  explicit MockLlm(std::vector<std::string> script);
  explicit MockLlm(std::map<std::string, std::vector<std::string>> per_question);

  CompletionResult complete(const Prompt& prompt, const CompletionParams& params) override;

  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> script_;
  std::map<std::string, std::deque<std::string>> per_question_;
  bool keyed_ = false;
  std::size_t calls_ = 0;
};

/// Stable cassette key: SHA-256 over the prompt bytes and the canonical
/// parameter JSON.
std::string cassette_key(const Prompt& prompt, const CompletionParams& params);
std::string sha256_hex(std::string_view bytes);

/// Record/replay over a JSON-lines cassette ({key, prompt_sha256, response,
/// params} per line). In strict mode a miss is CassetteMiss; otherwise the
/// miss is forwarded to `upstream` and appended to the cassette.
class ReplayLlm final : public LlmClient {
 public:
  ReplayLlm(std::filesystem::path cassette, std::shared_ptr<LlmClient> upstream = nullptr);

  CompletionResult complete(const Prompt& prompt, const CompletionParams& params) override;

  bool strict() const noexcept { return upstream_ == nullptr; }
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  std::shared_ptr<LlmClient> upstream_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> responses_;
};

struct HttpLlmOptions {
  std::string url = "https://api.openai.com/v1";
  std::optional<std::string> api_key;  // defaults to $LLM_API_KEY
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::size_t max_in_flight = 4;
  std::size_t requests_per_minute = 0;  // 0 = unlimited
};

/// OpenAI-compatible POST {url}/completions. Connection failures, 429 and 5xx
/// are retried with exponential backoff.
class HttpLlm final : public LlmClient {
 public:
  explicit HttpLlm(HttpLlmOptions options);
  ~HttpLlm() override;

  CompletionResult complete(const Prompt& prompt, const CompletionParams& params) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// First statement starting with SELECT or WITH, cut at the first unquoted
/// ';'. Code fences are ignored. nullopt when the completion holds no query.
std::optional<std::string> extract_sql(std::string_view raw);

}  // namespace skelsql
