#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/config.hpp"
#include "emag/ingest.hpp"
#include "emag/interest.hpp"
#include "emag/time.hpp"

namespace emag {

struct SearchFilters {
  std::optional<MediaKind> media;
  std::optional<Timestamp> from;  // inclusive, on publish_date
  std::optional<Timestamp> to;    // inclusive
  std::optional<std::string> source_id;

  bool matches(const ContentItem& item) const;
};

struct SearchQuery {
  std::string keyword;
  SearchFilters filters;
  std::size_t limit = 0;  // 0: unlimited
};

/// Throws Error(invalid_argument) for an empty keyword or from > to.
void validate_query(const SearchQuery& query);

/// Case-insensitive substring match over keywords, title and body text.
bool matches_keyword(const ContentItem& item, std::string_view keyword);

/// Matching items, newest publish_date first (ties by id).
std::vector<const ContentItem*> search(std::span<const ContentItem> items,
                                       const SearchQuery& query);

/// High-tier keyword weights of the user.
std::map<std::string, double, std::less<>> high_tier_weights(const UserProfile& user,
                                                             const InterestConfig& config);

double score_item(const ContentItem& item, const UserProfile& user, Timestamp now,
                  const InterestConfig& interest, const MagazineConfig& magazine);

struct MagazineSlot {
  std::string content_id;
  std::vector<std::string> matched_keywords;
  double score = 0.0;
};

struct MagazinePage {
  std::size_t page_number = 1;
  std::vector<MagazineSlot> slots;
  Timestamp generated_at;
};

enum class ColdStart { none, no_high_interests, no_matching_content };

std::string_view to_string(ColdStart c);

struct Magazine {
  std::vector<MagazinePage> pages;
  ColdStart cold_start = ColdStart::none;
  std::size_t total_items = 0;
};

/// Every item with a positive score, ordered by score, then newer
/// publish_date, then id, chunked into pages of page_size.
Magazine build_magazine(const UserProfile& user, std::span<const ContentItem> items,
                        Timestamp now, std::size_t page_size, const InterestConfig& interest,
                        const MagazineConfig& magazine);

struct SavedItem {
  std::string user_id;
  std::string content_id;
  Timestamp saved_at;
  std::optional<int> rating;
};

nlohmann::json saved_to_json(const SavedItem& s);
SavedItem saved_from_json(const nlohmann::json& j);

enum class SavedSort { saved_at, publish_date };

std::optional<SavedSort> saved_sort_from_string(std::string_view s);

struct SavedEntry {
  SavedItem saved;
  const ContentItem* item = nullptr;
};

/// Filters entries by the search filters (entries without a stored item are
/// dropped) and sorts newest first on the chosen key.
std::vector<SavedEntry> list_saved(std::vector<SavedEntry> entries, SavedSort sort,
                                   const SearchFilters& filters);

enum class ShareChannel { facebook, twitter, linkedin, googleplus, mail };

std::string_view to_string(ShareChannel c);
std::optional<ShareChannel> share_channel_from_string(std::string_view s);

struct SharePayload {
  ShareChannel channel = ShareChannel::facebook;
  std::string title;
  std::string link;
  std::string text_snippet;
};

inline constexpr std::size_t kSnippetLimit = 280;

/// Text up to kSnippetLimit code points; longer text keeps the first
/// kSnippetLimit - 3 code points followed by U+2026.
std::string make_snippet(std::string_view text);

SharePayload share_payload(const ContentItem& item, ShareChannel channel);

}  // namespace emag
