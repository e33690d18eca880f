#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emag/time.hpp"

namespace emag {

struct RawItem {
  std::string title;
  std::string link;
  std::string description;
  std::optional<Timestamp> publish_date;
};

struct ParsedFeed {
  std::vector<RawItem> items;
  std::size_t skipped = 0;  // <item> elements without title or link
};

/// Reads every <item> of an RSS 2.0 document in document order. Throws
/// xml::ParseError for malformed documents.
ParsedFeed parse_feed(std::string_view xml_document);

}  // namespace emag
