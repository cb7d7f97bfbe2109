#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "skelsql/encoder.hpp"
#include "skelsql/error.hpp"
#include "skelsql/network.hpp"

namespace skelsql {

using nlohmann::json;

struct SidecarEncoder::Impl {
  SidecarOptions options;
  detail::SplitUrl url;

  // One client per call: httplib clients are not safe for concurrent use.
  std::unique_ptr<httplib::Client> client() const {
    auto c = std::make_unique<httplib::Client>(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    c->set_connection_timeout(secs.count(), usecs.count());
    c->set_read_timeout(secs.count(), usecs.count());
    c->set_write_timeout(secs.count(), usecs.count());
    return c;
  }

  json call(const std::string& path, const json* body) const {
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
      detail::note_network_request();
      auto c = client();
      auto res = body ? c->Post(url.path_prefix + path, body->dump(), "application/json")
                      : c->Get(url.path_prefix + path);
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 503) {
        last_error = "sidecar still loading (503)";
        continue;
      }
      if (res->status == 400 || res->status == 422) {
        throw Error(ErrorCode::kPreconditionViolation,
                    path + " rejected request (" + std::to_string(res->status) + "): " + res->body);
      }
      if (res->status != 200) {
        throw Error(ErrorCode::kBackendUnavailable, path + " returned status " + std::to_string(res->status));
      }
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kBackendUnavailable, path + " returned invalid JSON: " + e.what());
      }
    }
    throw Error(ErrorCode::kBackendUnavailable, url.origin + url.path_prefix + path + ": " + last_error);
  }
};

namespace {

Vector to_vector(const json& j, std::size_t dimension, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::kBackendUnavailable, std::string(what) + " is not an array");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) {
    // NaN and infinity arrive as null.
    if (!x.is_number()) throw Error(ErrorCode::kBackendUnavailable, std::string(what) + " is not finite");
    v.push_back(x.get<double>());
  }
  if (v.size() != dimension) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has dimension " + std::to_string(v.size()) +
                                                   ", expected " + std::to_string(dimension));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kBackendUnavailable, std::string(what) + " is not finite");
  }
  return v;
}

template <typename Fn>
auto decoding(const char* endpoint, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendUnavailable, std::string(endpoint) + " returned an unexpected payload: " + e.what());
  }
}

}  // namespace

SidecarEncoder::SidecarEncoder(SidecarOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->url = detail::split_url(impl_->options.url);
  const json health = impl_->call("/healthz", nullptr);
  if (!health.contains("dim") || !health["dim"].is_number_unsigned() || health["dim"].get<std::size_t>() == 0) {
    throw Error(ErrorCode::kBackendUnavailable, "/healthz did not report a dimension");
  }
  dimension_ = health["dim"].get<std::size_t>();
  model_name_ = health.value("model_name", std::string("unknown"));
}

SidecarEncoder::~SidecarEncoder() = default;

SchemaRepresentations SidecarEncoder::encode(const EncodeRequest& request) const {
  validate_request(request);
  json body{{"question_tokens", request.question_tokens}, {"schema_tokens", request.schema_tokens}};
  body["masked_question_index"] =
      request.masked_question_index ? json(*request.masked_question_index) : json(nullptr);
  const json res = impl_->call("/embed_masked", &body);
  return decoding("/embed_masked", [&] {
    if (res.value("dim", std::size_t{0}) != dimension_) {
      throw Error(ErrorCode::kDimensionMismatch, "/embed_masked reported dim " + res.value("dim", json()).dump());
    }
    const auto& vectors = res.at("vectors");
    if (!vectors.is_array() || vectors.size() != request.schema_tokens.size()) {
      throw Error(ErrorCode::kBackendUnavailable, "/embed_masked returned the wrong number of vectors");
    }
    SchemaRepresentations out;
    out.dimension = dimension_;
    out.masked_index = request.masked_question_index;
    for (const auto& v : vectors) out.vectors.push_back(to_vector(v, dimension_, "schema vector"));
    return out;
  });
}

Vector SidecarEncoder::sentence_embed(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::kPreconditionViolation, "sentence_embed on empty text");
  }
  const json body{{"text", std::string(text)}};
  const json res = impl_->call("/sentence_embed", &body);
  Vector v = decoding("/sentence_embed", [&] { return to_vector(res.at("vector"), dimension_, "sentence vector"); });
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (n == 0.0) throw Error(ErrorCode::kBackendUnavailable, "sidecar returned a zero sentence vector");
  for (double& x : v) x /= n;
  return v;
}

PosTagging SidecarEncoder::pos_tag(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw Error(ErrorCode::kPreconditionViolation, "pos_tag on empty token list");
  const json body{{"tokens", std::vector<std::string>(tokens.begin(), tokens.end())}};
  const json res = impl_->call("/pos", &body);
  return decoding("/pos", [&] {
    const auto& tags = res.at("tags");
    if (!tags.is_array() || tags.size() != tokens.size()) {
      throw Error(ErrorCode::kBackendUnavailable, "/pos returned the wrong number of tags");
    }
    PosTagging out;
    for (const auto& t : tags) out.tags.push_back(parse_pos_tag(t.get<std::string>()));
    return out;
  });
}

}  // namespace skelsql
