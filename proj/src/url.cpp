#include "emag/url.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace emag::url {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits a reference into scheme/authority/path/query/fragment per the
// RFC 3986 appendix B regex.
struct Ref {
  std::optional<std::string> scheme, authority, query, fragment;
  std::string path;
};

Ref split(std::string_view s) {
  Ref r;
  auto colon = s.find(':');
  auto first_delim = s.find_first_of("/?#");
  if (colon != std::string_view::npos && colon > 0 &&
      (first_delim == std::string_view::npos || colon < first_delim)) {
    bool ok = std::isalpha(static_cast<unsigned char>(s[0]));
    for (std::size_t i = 1; i < colon && ok; ++i) {
      unsigned char c = s[i];
      ok = std::isalnum(c) || c == '+' || c == '-' || c == '.';
    }
    if (ok) {
      r.scheme = lower(s.substr(0, colon));
      s.remove_prefix(colon + 1);
    }
  }
  if (s.starts_with("//")) {
    s.remove_prefix(2);
    auto end = s.find_first_of("/?#");
    r.authority = std::string(s.substr(0, end));
    s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
  }
  if (auto hash = s.find('#'); hash != std::string_view::npos) {
    r.fragment = std::string(s.substr(hash + 1));
    s = s.substr(0, hash);
  }
  if (auto q = s.find('?'); q != std::string_view::npos) {
    r.query = std::string(s.substr(q + 1));
    s = s.substr(0, q);
  }
  r.path = std::string(s);
  return r;
}

std::string remove_dot_segments(std::string_view in) {
  std::vector<std::string> out;
  bool absolute = in.starts_with('/');
  std::size_t pos = absolute ? 1 : 0;
  bool trailing = false;
  while (pos <= in.size()) {
    auto next = in.find('/', pos);
    auto seg = in.substr(pos, next == std::string_view::npos ? in.size() - pos
                                                            : next - pos);
    trailing = false;
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing = true;
    } else if (seg == ".") {
      trailing = true;
    } else {
      out.emplace_back(seg);
    }
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) result += '/';
    result += out[i];
  }
  if (trailing && !result.empty() && result.back() != '/') result += '/';
  return result;
}

std::string merge(const Ref& base, std::string_view ref_path) {
  if (base.authority && base.path.empty()) return "/" + std::string(ref_path);
  auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

std::string recompose(const Ref& r) {
  std::string out;
  if (r.scheme) out += *r.scheme + ":";
  if (r.authority) out += "//" + *r.authority;
  out += r.path;
  if (r.query) out += "?" + *r.query;
  if (r.fragment) out += "#" + *r.fragment;
  return out;
}

}  // namespace

std::optional<Parts> parse(std::string_view u) {
  auto r = split(u);
  if (!r.scheme || !r.authority || r.authority->empty()) return std::nullopt;
  Parts p;
  p.scheme = *r.scheme;
  std::string_view auth = *r.authority;
  if (auto at = auth.rfind('@'); at != std::string_view::npos) auth.remove_prefix(at + 1);
  if (auto colon = auth.rfind(':'); colon != std::string_view::npos &&
                                    auth.find(']') == std::string_view::npos) {
    auto port = auth.substr(colon + 1);
    if (port.empty() || port.size() > 5 ||
        !std::all_of(port.begin(), port.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
      return std::nullopt;
    }
    p.port = std::stoi(std::string(port));
    auth = auth.substr(0, colon);
  }
  if (auth.empty()) return std::nullopt;
  for (unsigned char c : auth) {
    if (std::isspace(c) || c == '<' || c == '>' || c == '"') return std::nullopt;
  }
  p.host = lower(auth);
  p.path = r.path;
  p.query = r.query.value_or("");
  p.fragment = r.fragment.value_or("");
  return p;
}

bool is_http_url(std::string_view u) {
  auto p = parse(u);
  return p && (p->scheme == "http" || p->scheme == "https");
}

std::string resolve(std::string_view base_str, std::string_view ref_str) {
  auto base = split(base_str);
  if (!base.scheme || !base.authority) return std::string(ref_str);
  auto ref = split(ref_str);
  Ref t;
  if (ref.scheme) {
    t = ref;
    t.path = remove_dot_segments(ref.path);
  } else {
    if (ref.authority) {
      t.authority = ref.authority;
      t.path = remove_dot_segments(ref.path);
      t.query = ref.query;
    } else {
      if (ref.path.empty()) {
        t.path = base.path;
        t.query = ref.query ? ref.query : base.query;
      } else {
        if (ref.path.starts_with('/')) {
          t.path = remove_dot_segments(ref.path);
        } else {
          t.path = remove_dot_segments(merge(base, ref.path));
        }
        t.query = ref.query;
      }
      t.authority = base.authority;
    }
    t.scheme = base.scheme;
  }
  t.fragment = ref.fragment;
  return recompose(t);
}

bool host_matches(std::string_view host, std::string_view domain) {
  auto h = lower(host);
  auto d = lower(domain);
  if (h == d) return true;
  return h.size() > d.size() && h.ends_with(d) && h[h.size() - d.size() - 1] == '.';
}

}  // namespace emag::url
