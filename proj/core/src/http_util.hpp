#pragma once

#include <string>
#include <string_view>

#include "skelsql/error.hpp"

namespace skelsql::detail {

// "http://host:8080/v1/" -> {"http://host:8080", "/v1"}
struct SplitUrl {
  std::string origin;
  std::string path_prefix;
};

inline SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kConfigError, "URL without scheme: '" + std::string(url) + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) {
    out.path_prefix = std::string(url.substr(path_start));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

}  // namespace skelsql::detail
