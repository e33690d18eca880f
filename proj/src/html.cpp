#include "emag/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "emag/url.hpp"

namespace emag::html {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
         c == ':' || c == '.';
}
char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals_at(std::string_view s, std::size_t pos, std::string_view what) {
  if (pos + what.size() > s.size()) return false;
  for (std::size_t k = 0; k < what.size(); ++k)
    if (to_lower(s[pos + k]) != what[k]) return false;
  return true;
}

bool is_raw_text_element(std::string_view name) {
  return name == "script" || name == "style";
}

bool is_block_element(std::string_view name) {
  static constexpr std::array<std::string_view, 36> kBlock = {
      "address", "article", "aside",  "blockquote", "br",     "dd",
      "div",     "dl",      "dt",     "figcaption", "figure", "footer",
      "form",    "h1",      "h2",     "h3",         "h4",     "h5",
      "h6",      "header",  "hr",     "li",         "main",   "nav",
      "ol",      "p",       "pre",    "section",    "table",  "tbody",
      "td",      "tfoot",   "th",     "thead",      "tr",     "ul"};
  return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end();
}

// Parses attributes from position i up to the closing '>'. Returns the
// position one past the '>' (or s.size() for an unterminated tag).
std::size_t parse_attributes(std::string_view s, std::size_t i, Token& tok) {
  while (i < s.size()) {
    while (i < s.size() && (is_space(s[i]) || s[i] == '/')) {
      if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '>') tok.self_closing = true;
      ++i;
    }
    if (i >= s.size()) break;
    if (s[i] == '>') return i + 1;
    std::size_t name_start = i;
    while (i < s.size() && !is_space(s[i]) && s[i] != '=' && s[i] != '>' &&
           !(s[i] == '/' && i > name_start)) {
      ++i;
    }
    std::string name(s.substr(name_start, i - name_start));
    std::transform(name.begin(), name.end(), name.begin(), to_lower);
    while (i < s.size() && is_space(s[i])) ++i;
    std::string value;
    if (i < s.size() && s[i] == '=') {
      ++i;
      while (i < s.size() && is_space(s[i])) ++i;
      if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
        char quote = s[i++];
        auto close = s.find(quote, i);
        if (close == std::string_view::npos) close = s.size();
        value = std::string(s.substr(i, close - i));
        i = std::min(close + 1, s.size());
      } else {
        std::size_t v_start = i;
        while (i < s.size() && !is_space(s[i]) && s[i] != '>') ++i;
        value = std::string(s.substr(v_start, i - v_start));
      }
    }
    if (!name.empty()) tok.attributes.push_back({std::move(name), decode_entities(value)});
  }
  return s.size();
}

std::vector<std::string> collect_attribute(std::string_view fragment,
                                           std::string_view base,
                                           std::initializer_list<std::string_view> tags,
                                           std::string_view attr) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(fragment)) {
    if (tok.kind != Token::Kind::start_tag) continue;
    if (std::find(tags.begin(), tags.end(), tok.name) == tags.end()) continue;
    const std::string* value = tok.attribute(attr);
    if (!value) continue;
    auto first = value->find_first_not_of(" \t\r\n\f");
    if (first == std::string::npos) continue;
    auto last = value->find_last_not_of(" \t\r\n\f");
    std::string v = value->substr(first, last - first + 1);
    out.push_back(base.empty() ? v : url::resolve(base, v));
  }
  return out;
}

}  // namespace

const std::string* Token::attribute(std::string_view attr) const {
  for (const auto& a : attributes)
    if (a.name == attr) return &a.value;
  return nullptr;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::string text;
  auto flush_text = [&] {
    if (!text.empty()) {
      tokens.push_back(Token{Token::Kind::text, {}, std::move(text), {}, false});
      text.clear();
    }
  };

  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '<' || i + 1 >= s.size()) {
      text += s[i++];
      continue;
    }
    char next = s[i + 1];
    if (s.substr(i, 4) == "<!--") {
      flush_text();
      auto end = s.find("-->", i + 4);
      std::size_t stop = end == std::string_view::npos ? s.size() : end;
      tokens.push_back(Token{Token::Kind::comment, {},
                             std::string(s.substr(i + 4, stop - i - 4)), {}, false});
      i = end == std::string_view::npos ? s.size() : end + 3;
    } else if (next == '!' || next == '?' || (next == '/' && (i + 2 >= s.size() || !is_alpha(s[i + 2])))) {
      // doctype, processing instruction or bogus end tag
      flush_text();
      auto end = s.find('>', i + 2);
      std::size_t stop = end == std::string_view::npos ? s.size() : end;
      tokens.push_back(Token{Token::Kind::comment, {},
                             std::string(s.substr(i + 2, stop - i - 2)), {}, false});
      i = end == std::string_view::npos ? s.size() : end + 1;
    } else if (next == '/') {
      flush_text();
      std::size_t j = i + 2;
      std::size_t name_start = j;
      while (j < s.size() && is_name_char(s[j])) ++j;
      Token tok{Token::Kind::end_tag, std::string(s.substr(name_start, j - name_start)), {}, {}, false};
      std::transform(tok.name.begin(), tok.name.end(), tok.name.begin(), to_lower);
      auto end = s.find('>', j);
      i = end == std::string_view::npos ? s.size() : end + 1;
      tokens.push_back(std::move(tok));
    } else if (is_alpha(next)) {
      flush_text();
      std::size_t j = i + 1;
      while (j < s.size() && is_name_char(s[j])) ++j;
      Token tok{Token::Kind::start_tag, std::string(s.substr(i + 1, j - i - 1)), {}, {}, false};
      std::transform(tok.name.begin(), tok.name.end(), tok.name.begin(), to_lower);
      i = parse_attributes(s, j, tok);
      bool raw = is_raw_text_element(tok.name) && !tok.self_closing;
      std::string name = tok.name;
      tokens.push_back(std::move(tok));
      if (raw) {
        std::size_t close = i;
        while (close < s.size()) {
          close = s.find("</", close);
          if (close == std::string_view::npos) {
            close = s.size();
            break;
          }
          if (iequals_at(s, close + 2, name)) break;
          close += 2;
        }
        if (close > i) {
          tokens.push_back(Token{Token::Kind::text, name,
                                 std::string(s.substr(i, close - i)), {}, false});
        }
        i = close;
      }
    } else {
      text += s[i++];
    }
  }
  flush_text();
  return tokens;
}

std::string decode_entities(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, char>, 5> kEntities = {{
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      bool matched = false;
      for (auto [entity, ch] : kEntities) {
        if (s.substr(i, entity.size()) == entity) {
          out += ch;
          i += entity.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out += s[i++];
  }
  return out;
}

std::string strip_text(std::string_view fragment) {
  std::string raw;
  raw.reserve(fragment.size());
  for (const auto& tok : tokenize(fragment)) {
    switch (tok.kind) {
      case Token::Kind::text:
        if (tok.name.empty()) raw += tok.data;  // script/style bodies carry a name
        break;
      case Token::Kind::start_tag:
      case Token::Kind::end_tag:
        if (is_block_element(tok.name)) raw += ' ';
        break;
      case Token::Kind::comment:
        break;
    }
  }

  // Decode to a fixed point so that a second pass has nothing left to decode.
  for (;;) {
    std::string decoded = decode_entities(raw);
    if (decoded == raw) break;
    raw = std::move(decoded);
  }

  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += c;
    // A decoded '<' must not be able to open a tag on re-parse.
    if (c == '<' && i + 1 < raw.size()) {
      char n = raw[i + 1];
      if (is_alpha(n) || n == '/' || n == '!' || n == '?') out += ' ';
    }
  }
  return out;
}

std::vector<std::string> extract_links(std::string_view fragment, std::string_view base) {
  return collect_attribute(fragment, base, {"a"}, "href");
}

std::vector<std::string> extract_images(std::string_view fragment, std::string_view base) {
  return collect_attribute(fragment, base, {"img"}, "src");
}

std::vector<std::string> extract_embeds(std::string_view fragment, std::string_view base) {
  return collect_attribute(fragment, base, {"iframe", "embed", "video", "source"}, "src");
}

Details description_details(std::string_view fragment, std::string_view base) {
  return Details{strip_text(fragment), extract_links(fragment, base),
                 extract_images(fragment, base)};
}

}  // namespace emag::html
