#include "emag/xml.hpp"

#include <cctype>
#include <cstdint>

namespace emag::xml {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
         c == '.';
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  Element run() {
    skip_prolog();
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected root element");
    Element root = element();
    skip_misc();
    if (pos_ < s_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  bool starts_with(std::string_view what) const { return s_.substr(pos_, what.size()) == what; }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_until(std::string_view terminator, const char* what) {
    auto end = s_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos_ = end + terminator.size();
  }

  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else {
        return;
      }
    }
  }

  void skip_prolog() {
    if (starts_with("\xEF\xBB\xBF")) pos_ += 3;
    skip_misc();
    if (starts_with("<!DOCTYPE")) {
      int depth = 0;
      for (; pos_ < s_.size(); ++pos_) {
        if (s_[pos_] == '[') ++depth;
        else if (s_[pos_] == ']') --depth;
        else if (s_[pos_] == '>' && depth <= 0) break;
      }
      if (pos_ >= s_.size()) fail("unterminated DOCTYPE");
      ++pos_;
      skip_misc();
    }
  }

  std::string name() {
    if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail("expected name");
    std::size_t start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  // Decodes one reference starting at '&'.
  void reference(std::string& out) {
    std::size_t start = pos_;
    auto semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 12) {
      out += '&';
      ++pos_;
      return;
    }
    std::string_view ref = s_.substr(pos_ + 1, semi - pos_ - 1);
    pos_ = semi + 1;
    if (ref == "amp") out += '&';
    else if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.size() > 1 && ref[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ref[1] == 'x' || ref[1] == 'X';
      auto digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) {
        pos_ = start;
        fail("empty character reference");
      }
      for (char c : digits) {
        int v;
        if (std::isdigit(static_cast<unsigned char>(c))) v = c - '0';
        else if (hex && std::isxdigit(static_cast<unsigned char>(c)))
          v = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
        else {
          pos_ = start;
          fail("bad character reference");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) {
          pos_ = start;
          fail("character reference out of range");
        }
      }
      append_utf8(out, cp);
    } else {
      out += s_.substr(start, pos_ - start);  // undeclared entity, kept verbatim
    }
  }

  Element element() {
    ++pos_;  // '<'
    Element el;
    el.name = name();
    for (;;) {
      std::size_t before = pos_;
      skip_space();
      if (pos_ >= s_.size()) fail("unterminated start tag");
      if (s_[pos_] == '/') {
        if (!starts_with("/>")) fail("expected '>'");
        pos_ += 2;
        el.inner_begin = el.inner_end = pos_;
        return el;
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (before == pos_) fail("expected whitespace before attribute");
      std::string attr = name();
      skip_space();
      if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected '=' after attribute name");
      ++pos_;
      skip_space();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted value");
      char quote = s_[pos_++];
      std::string value;
      while (pos_ < s_.size() && s_[pos_] != quote) {
        if (s_[pos_] == '<') fail("'<' in attribute value");
        if (s_[pos_] == '&') reference(value);
        else value += s_[pos_++];
      }
      if (pos_ >= s_.size()) fail("unterminated attribute value");
      ++pos_;
      el.attributes.emplace_back(std::move(attr), std::move(value));
    }

    el.inner_begin = pos_;
    for (;;) {
      if (pos_ >= s_.size()) fail("unclosed element <" + el.name + ">");
      char c = s_[pos_];
      if (c == '<') {
        if (starts_with("</")) {
          el.inner_end = pos_;
          pos_ += 2;
          std::size_t tag_pos = pos_ - 2;
          std::string closing = name();
          if (closing != el.name) {
            pos_ = tag_pos;
            fail("mismatched end tag </" + closing + "> for <" + el.name + ">");
          }
          skip_space();
          if (pos_ >= s_.size() || s_[pos_] != '>') fail("expected '>'");
          ++pos_;
          return el;
        }
        if (starts_with("<!--")) {
          skip_until("-->", "comment");
        } else if (starts_with("<![CDATA[")) {
          pos_ += 9;
          auto end = s_.find("]]>", pos_);
          if (end == std::string_view::npos) fail("unterminated CDATA section");
          el.text += s_.substr(pos_, end - pos_);
          pos_ = end + 3;
        } else if (starts_with("<?")) {
          skip_until("?>", "processing instruction");
        } else {
          el.children.push_back(element());
        }
      } else if (c == '&') {
        reference(el.text);
      } else {
        el.text += c;
        ++pos_;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

Element parse(std::string_view document) { return Parser(document).run(); }

}  // namespace emag::xml
