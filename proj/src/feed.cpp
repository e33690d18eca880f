#include "emag/feed.hpp"

#include "emag/xml.hpp"

namespace emag {

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void collect_items(const xml::Element& el, std::vector<const xml::Element*>& out) {
  for (const auto& c : el.children) {
    if (c.name == "item") out.push_back(&c);
    else collect_items(c, out);
  }
}

}  // namespace

ParsedFeed parse_feed(std::string_view document) {
  xml::Element root = xml::parse(document);
  std::vector<const xml::Element*> item_elements;
  collect_items(root, item_elements);

  ParsedFeed feed;
  for (const xml::Element* el : item_elements) {
    RawItem item;
    if (auto* t = el->child("title")) item.title = trim(t->text);
    if (auto* l = el->child("link")) item.link = trim(l->text);
    if (auto* d = el->child("description")) {
      // Unescaped markup inside <description> parses as child elements; keep
      // it as the original source fragment.
      item.description = d->children.empty()
                             ? trim(d->text)
                             : trim(document.substr(d->inner_begin, d->inner_end - d->inner_begin));
    }
    if (auto* p = el->child("pubDate")) item.publish_date = parse_rfc822(trim(p->text));
    if (item.title.empty() || item.link.empty()) {
      ++feed.skipped;
      continue;
    }
    feed.items.push_back(std::move(item));
  }
  return feed;
}

}  // namespace emag
