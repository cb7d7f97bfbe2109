#include "skelsql/llm.hpp"

#include <cctype>
#include <fstream>
#include <regex>

#include <openssl/evp.h>

#include "skelsql/error.hpp"

namespace skelsql {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::microseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string strip_fences(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const auto end = raw.find('\n', pos);
    const auto line = raw.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    const auto lead = line.find_first_not_of(" \t");
    const bool fence = lead != std::string_view::npos && line.substr(lead).starts_with("```");
    if (!fence) {
      out.append(line);
      if (end != std::string_view::npos) out += '\n';
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

json to_json(const CompletionParams& params) {
  return {{"model", params.model},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens},
          {"stop", params.stop}};
}

std::string_view to_string(LlmBackend backend) noexcept {
  switch (backend) {
    case LlmBackend::kMock: return "mock";
    case LlmBackend::kReplay: return "replay";
    case LlmBackend::kHttp: return "http";
  }
  return "mock";
}

// --- mock ------------------------------------------------------------------

MockLlm::MockLlm(std::vector<std::string> script) : script_(script.begin(), script.end()) {}

MockLlm::MockLlm(std::map<std::string, std::vector<std::string>> per_question) : keyed_(true) {
  for (auto& [question, responses] : per_question) {
    per_question_.emplace(question, std::deque<std::string>(responses.begin(), responses.end()));
  }
}

CompletionResult MockLlm::complete(const Prompt& prompt, const CompletionParams&) {
  const auto start = Clock::now();
  std::lock_guard lock(mutex_);
  ++calls_;
  std::deque<std::string>* queue = &script_;
  if (keyed_) {
    auto found = per_question_.find(prompt.question_text);
    if (found == per_question_.end()) {
      throw Error(ErrorCode::kScriptExhausted, "no script for question '" + prompt.question_text + "'");
    }
    queue = &found->second;
  }
  if (queue->empty()) throw Error(ErrorCode::kScriptExhausted, "mock script has no responses left");
  CompletionResult result{std::move(queue->front()), {}, LlmBackend::kMock};
  queue->pop_front();
  result.latency = since(start);
  return result;
}

std::size_t MockLlm::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// --- replay ----------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string cassette_key(const Prompt& prompt, const CompletionParams& params) {
  std::string material = prompt.text;
  material += '\x1f';
  material += to_json(params).dump();
  return sha256_hex(material);
}

ReplayLlm::ReplayLlm(std::filesystem::path cassette, std::shared_ptr<LlmClient> upstream)
    : path_(std::move(cassette)), upstream_(std::move(upstream)) {
  std::ifstream in(path_);
  if (!in) return;  // an absent cassette is empty
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json entry = json::parse(line);
      responses_[entry.at("key").get<std::string>()] = entry.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIoError, path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

CompletionResult ReplayLlm::complete(const Prompt& prompt, const CompletionParams& params) {
  const auto start = Clock::now();
  const std::string key = cassette_key(prompt, params);
  {
    std::lock_guard lock(mutex_);
    auto found = responses_.find(key);
    if (found != responses_.end()) return {found->second, since(start), LlmBackend::kReplay};
  }
  if (!upstream_) throw Error(ErrorCode::kCassetteMiss, "no recorded completion for key " + key);

  CompletionResult result = upstream_->complete(prompt, params);
  const json entry{{"key", key},
                   {"prompt_sha256", sha256_hex(prompt.text)},
                   {"response", result.raw_text},
                   {"params", to_json(params)}};
  std::lock_guard lock(mutex_);
  if (responses_.emplace(key, result.raw_text).second) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorCode::kIoError, "cannot append to cassette '" + path_.string() + "'");
    out << entry.dump() << '\n';
  }
  return result;
}

std::size_t ReplayLlm::size() const {
  std::lock_guard lock(mutex_);
  return responses_.size();
}

// --- extraction --------------------------------------------------------------

std::optional<std::string> extract_sql(std::string_view raw) {
  const std::string text = strip_fences(raw);
  static const std::regex kSelect(R"(\bselect\b)", std::regex::icase);
  static const std::regex kWith(R"(\bwith\s+(recursive\s+)?[A-Za-z_][A-Za-z0-9_]*\s*(\([^)]*\)\s*)?as\s*\()",
                                std::regex::icase);

  std::optional<std::size_t> start;
  for (const auto* pattern : {&kSelect, &kWith}) {
    std::smatch m;
    if (std::regex_search(text, m, *pattern)) {
      const auto pos = static_cast<std::size_t>(m.position(0));
      if (!start || pos < *start) start = pos;
    }
  }
  if (!start) return std::nullopt;

  char quote = 0;
  std::size_t end = text.size();
  for (std::size_t i = *start; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == ';') {
      end = i;
      break;
    }
  }
  std::string sql = trim(std::string_view(text).substr(*start, end - *start));
  if (sql.empty()) return std::nullopt;
  return sql;
}

}  // namespace skelsql
