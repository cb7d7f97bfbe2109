#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <thread>

#include <httplib.h>

#include "http_util.hpp"
#include "skelsql/error.hpp"
#include "skelsql/llm.hpp"
#include "skelsql/network.hpp"

namespace skelsql {

using nlohmann::json;

struct HttpLlm::Impl {
  HttpLlmOptions options;
  detail::SplitUrl url;

  std::mutex mutex;
  std::condition_variable slots_freed;
  std::size_t in_flight = 0;
  std::deque<std::chrono::steady_clock::time_point> recent;  // request starts within the last minute

  void acquire() {
    std::unique_lock lock(mutex);
    slots_freed.wait(lock, [&] { return in_flight < std::max<std::size_t>(options.max_in_flight, 1); });
    ++in_flight;
    if (options.requests_per_minute == 0) return;
    while (true) {
      const auto now = std::chrono::steady_clock::now();
      while (!recent.empty() && now - recent.front() >= std::chrono::minutes(1)) recent.pop_front();
      if (recent.size() < options.requests_per_minute) {
        recent.push_back(now);
        return;
      }
      const auto wake = recent.front() + std::chrono::minutes(1);
      lock.unlock();
      std::this_thread::sleep_until(wake);
      lock.lock();
    }
  }

  void release() {
    {
      std::lock_guard lock(mutex);
      --in_flight;
    }
    slots_freed.notify_one();
  }
};

HttpLlm::HttpLlm(HttpLlmOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->url = detail::split_url(impl_->options.url);
  if (!impl_->options.api_key) {
    if (const char* env = std::getenv("LLM_API_KEY"); env && *env) impl_->options.api_key = env;
  }
}

HttpLlm::~HttpLlm() = default;

CompletionResult HttpLlm::complete(const Prompt& prompt, const CompletionParams& params) {
  const auto& opts = impl_->options;
  if (!opts.api_key || opts.api_key->empty()) {
    throw Error(ErrorCode::kCredentialMissing, "set LLM_API_KEY to use the http backend");
  }
  if (prompt.text.empty()) throw Error(ErrorCode::kPreconditionViolation, "empty prompt");

  const json body{{"model", params.model},
                  {"prompt", prompt.text},
                  {"temperature", params.temperature},
                  {"max_tokens", params.max_tokens},
                  {"stop", params.stop}};
  const httplib::Headers headers{{"Authorization", "Bearer " + *opts.api_key}};
  const auto start = std::chrono::steady_clock::now();

  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opts.backoff * (1 << (attempt - 1)));

    impl_->acquire();
    detail::note_network_request();
    httplib::Client client(impl_->url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    auto res = client.Post(impl_->url.path_prefix + "/completions", headers, body.dump(), "application/json");
    impl_->release();

    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status == 429 || res->status >= 500) {
      last_error = res->body;
      continue;
    }
    if (res->status != 200) throw Error(ErrorCode::kHttpError, std::to_string(res->status) + ": " + res->body);
    try {
      const json reply = json::parse(res->body);
      std::string text = reply.at("choices").at(0).at("text").get<std::string>();
      return {std::move(text),
              std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start),
              LlmBackend::kHttp};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kHttpError, std::string("unexpected completion payload: ") + e.what());
    }
  }
  throw Error(ErrorCode::kHttpError, std::to_string(last_status) + " after " + std::to_string(opts.max_retries) +
                                         " retries: " + last_error);
}

}  // namespace skelsql
