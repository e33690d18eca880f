#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "emag/error.hpp"

namespace emag::xml {

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::invalid_argument,
              "xml parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // decoded character data and CDATA of this element only
  std::size_t inner_begin = 0;  // byte range of the content in the source
  std::size_t inner_end = 0;

  const Element* child(std::string_view child_name) const;
};

/// Non-validating parser for the subset of XML that syndication feeds use:
/// elements, attributes, character data, CDATA, comments, processing
/// instructions and a skipped DOCTYPE. Undeclared named entities are kept
/// verbatim; structural errors throw ParseError with the byte offset.
Element parse(std::string_view document);

}  // namespace emag::xml
