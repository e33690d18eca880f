#include "emag/magazine.hpp"

#include <algorithm>

#include "emag/error.hpp"
#include "emag/kernels.hpp"

namespace emag {

bool SearchFilters::matches(const ContentItem& item) const {
  if (media && item.media_kind != *media) return false;
  if (from && item.publish_date < *from) return false;
  if (to && item.publish_date > *to) return false;
  if (source_id && item.source_id != *source_id) return false;
  return true;
}

void validate_query(const SearchQuery& query) {
  if (query.keyword.find_first_not_of(" \t\r\n") == std::string::npos)
    fail(ErrorKind::invalid_argument, "search keyword is empty");
  if (query.filters.from && query.filters.to && *query.filters.from > *query.filters.to)
    fail(ErrorKind::invalid_argument, "search date range starts after it ends");
}

bool matches_keyword(const ContentItem& item, std::string_view keyword) {
  auto needle = to_lower(keyword);
  if (needle.empty()) return false;
  for (const auto& k : item.keywords)
    if (k.find(needle) != std::string::npos) return true;
  return to_lower(item.title).find(needle) != std::string::npos ||
         to_lower(item.body_text).find(needle) != std::string::npos;
}

std::vector<const ContentItem*> search(std::span<const ContentItem> items,
                                       const SearchQuery& query) {
  validate_query(query);
  std::vector<const ContentItem*> out;
  for (const auto& item : items)
    if (query.filters.matches(item) && matches_keyword(item, query.keyword)) out.push_back(&item);
  std::sort(out.begin(), out.end(), [](const ContentItem* a, const ContentItem* b) {
    if (a->publish_date != b->publish_date) return a->publish_date > b->publish_date;
    return a->id < b->id;
  });
  if (query.limit && out.size() > query.limit) out.resize(query.limit);
  return out;
}

std::map<std::string, double, std::less<>> high_tier_weights(const UserProfile& user,
                                                             const InterestConfig& config) {
  std::map<std::string, double, std::less<>> out;
  for (const auto& [kw, e] : user.interests)
    if (tier_of(e.weight, config) == Tier::high) out.emplace(kw, e.weight);
  return out;
}

double score_item(const ContentItem& item, const UserProfile& user, Timestamp now,
                  const InterestConfig& interest, const MagazineConfig& magazine) {
  return kernels::score_one(item, high_tier_weights(user, interest), now,
                            magazine.freshness_hours);
}

std::string_view to_string(ColdStart c) {
  switch (c) {
    case ColdStart::none: return "none";
    case ColdStart::no_high_interests: return "no_high_interests";
    case ColdStart::no_matching_content: return "no_matching_content";
  }
  return "none";
}

Magazine build_magazine(const UserProfile& user, std::span<const ContentItem> items,
                        Timestamp now, std::size_t page_size, const InterestConfig& interest,
                        const MagazineConfig& magazine) {
  if (page_size < 1) fail(ErrorKind::invalid_argument, "page_size must be at least 1");
  Magazine out;
  auto high = high_tier_weights(user, interest);
  if (high.empty()) {
    out.cold_start = ColdStart::no_high_interests;
    return out;
  }

  std::vector<const ContentItem*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& item : items) ptrs.push_back(&item);
  auto scores = kernels::score_items_parallel(ptrs, high, now, magazine.freshness_hours);

  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < ptrs.size(); ++i)
    if (scores[i] > 0.0) ranked.push_back(i);
  std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (ptrs[a]->publish_date != ptrs[b]->publish_date)
      return ptrs[a]->publish_date > ptrs[b]->publish_date;
    return ptrs[a]->id < ptrs[b]->id;
  });

  out.total_items = ranked.size();
  if (ranked.empty()) {
    out.cold_start = ColdStart::no_matching_content;
    return out;
  }
  for (std::size_t start = 0; start < ranked.size(); start += page_size) {
    MagazinePage page;
    page.page_number = out.pages.size() + 1;
    page.generated_at = now;
    for (std::size_t i = start; i < std::min(ranked.size(), start + page_size); ++i) {
      const ContentItem& item = *ptrs[ranked[i]];
      MagazineSlot slot{item.id, {}, scores[ranked[i]]};
      for (const auto& kw : item.keywords)
        if (high.count(kw)) slot.matched_keywords.push_back(kw);
      page.slots.push_back(std::move(slot));
    }
    out.pages.push_back(std::move(page));
  }
  return out;
}

nlohmann::json saved_to_json(const SavedItem& s) {
  return {{"user_id", s.user_id},
          {"content_id", s.content_id},
          {"saved_at", format_iso8601(s.saved_at)},
          {"rating", s.rating ? nlohmann::json(*s.rating) : nlohmann::json(nullptr)}};
}

SavedItem saved_from_json(const nlohmann::json& j) {
  SavedItem s;
  s.user_id = j.at("user_id").get<std::string>();
  s.content_id = j.at("content_id").get<std::string>();
  auto t = parse_iso8601(j.at("saved_at").get<std::string>());
  if (!t) fail(ErrorKind::invalid_argument, "bad saved_at");
  s.saved_at = *t;
  if (auto r = j.find("rating"); r != j.end() && r->is_number_integer()) s.rating = r->get<int>();
  return s;
}

std::optional<SavedSort> saved_sort_from_string(std::string_view s) {
  if (s.empty() || s == "saved_at") return SavedSort::saved_at;
  if (s == "publish_date") return SavedSort::publish_date;
  return std::nullopt;
}

std::vector<SavedEntry> list_saved(std::vector<SavedEntry> entries, SavedSort sort,
                                   const SearchFilters& filters) {
  std::erase_if(entries, [&](const SavedEntry& e) { return !e.item || !filters.matches(*e.item); });
  std::sort(entries.begin(), entries.end(), [sort](const SavedEntry& a, const SavedEntry& b) {
    auto ka = sort == SavedSort::saved_at ? a.saved.saved_at : a.item->publish_date;
    auto kb = sort == SavedSort::saved_at ? b.saved.saved_at : b.item->publish_date;
    if (ka != kb) return ka > kb;
    return a.saved.content_id < b.saved.content_id;
  });
  return entries;
}

std::string_view to_string(ShareChannel c) {
  switch (c) {
    case ShareChannel::facebook: return "facebook";
    case ShareChannel::twitter: return "twitter";
    case ShareChannel::linkedin: return "linkedin";
    case ShareChannel::googleplus: return "googleplus";
    case ShareChannel::mail: return "mail";
  }
  return "facebook";
}

std::optional<ShareChannel> share_channel_from_string(std::string_view s) {
  for (auto c : {ShareChannel::facebook, ShareChannel::twitter, ShareChannel::linkedin,
                 ShareChannel::googleplus, ShareChannel::mail})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::string make_snippet(std::string_view text) {
  // byte offsets of code point starts
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < text.size(); ++i)
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) starts.push_back(i);
  if (starts.size() <= kSnippetLimit) return std::string(text);
  return std::string(text.substr(0, starts[kSnippetLimit - 3])) + "\xE2\x80\xA6";
}

SharePayload share_payload(const ContentItem& item, ShareChannel channel) {
  return {channel, item.title, item.canonical_link, make_snippet(item.body_text)};
}

}  // namespace emag
