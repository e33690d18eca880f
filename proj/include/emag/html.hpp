#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace emag::html {

struct Attribute {
  std::string name;  // lowercase
  std::string value;  // entity-decoded
};

struct Token {
  enum class Kind { text, start_tag, end_tag, comment };
  Kind kind = Kind::text;
  std::string name;  // lowercase tag name, empty for text/comment
  std::string data;  // raw text for text tokens
  std::vector<Attribute> attributes;
  bool self_closing = false;

  const std::string* attribute(std::string_view attr) const;
};

/// Lenient HTML tokenizer. Never fails: a '<' that does not begin a tag is
/// text, unterminated tags run to the end of input, and the raw contents of
/// <script> and <style> come back as a single text token flagged by the
/// preceding start tag.
std::vector<Token> tokenize(std::string_view fragment);

/// Decodes &amp; &lt; &gt; &quot; &#39; once. Everything else is
/// passed through unchanged.
std::string decode_entities(std::string_view s);

/// Tags removed, script/style bodies dropped, the five named entities
/// decoded, whitespace collapsed and trimmed. Idempotent; the result never
/// contains '<' directly followed by a letter, '/' or '!'.
std::string strip_text(std::string_view fragment);

/// href of every <a>, in document order, duplicates kept. Relative URLs are
/// resolved against base when base is an absolute URL.
std::vector<std::string> extract_links(std::string_view fragment,
                                       std::string_view base = {});

/// src of every <img>, same ordering and resolution rules as extract_links.
std::vector<std::string> extract_images(std::string_view fragment,
                                        std::string_view base = {});

/// src of every <iframe>/<embed>/<video>/<source>.
std::vector<std::string> extract_embeds(std::string_view fragment,
                                        std::string_view base = {});

struct Details {
  std::string text;
  std::vector<std::string> links;
  std::vector<std::string> images;

  bool operator==(const Details&) const = default;
};

Details description_details(std::string_view fragment, std::string_view base = {});

}  // namespace emag::html
