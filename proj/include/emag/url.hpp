#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace emag::url {

struct Parts {
  std::string scheme;  // lowercase
  std::string host;    // lowercase, no port
  int port = 0;        // 0 when absent
  std::string path;    // starts with '/' or empty
  std::string query;   // without '?'
  std::string fragment;
};

/// Parses absolute URLs only ("scheme://host[:port]/...").
std::optional<Parts> parse(std::string_view u);

bool is_http_url(std::string_view u);

/// RFC 3986 reference resolution. When the base is not absolute the
/// reference is returned verbatim.
std::string resolve(std::string_view base, std::string_view ref);

/// True when host equals domain or is a subdomain of it.
bool host_matches(std::string_view host, std::string_view domain);

}  // namespace emag::url
