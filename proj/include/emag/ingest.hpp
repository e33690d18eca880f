#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/config.hpp"
#include "emag/error.hpp"
#include "emag/feed.hpp"
#include "emag/html.hpp"
#include "emag/taxonomy.hpp"
#include "emag/time.hpp"

namespace emag {

namespace store {
class Store;
}

struct FeedSource {
  std::string id;
  std::string url;
  std::string category;
  std::optional<Timestamp> last_fetched;
  bool enabled = true;
};

/// Throws Error(invalid_argument) unless url is absolute http(s), the id is
/// non-empty and the category resolves in the taxonomy.
void validate_source(const FeedSource& source, const Taxonomy& taxonomy);

enum class MediaKind { article, image, video, mixed };

std::string_view to_string(MediaKind kind);
std::optional<MediaKind> media_kind_from_string(std::string_view s);

struct ContentItem {
  std::string id;
  std::string title;
  std::string canonical_link;
  std::string body_text;
  std::vector<std::string> links;
  std::vector<std::string> image_urls;
  std::vector<std::string> video_urls;
  Timestamp publish_date;
  Timestamp fetched_at;
  std::string category;
  MediaKind media_kind = MediaKind::article;
  std::string source_id;
  std::set<std::string> keywords;
};

void to_json(nlohmann::json& j, const FeedSource& s);
void from_json(const nlohmann::json& j, FeedSource& s);
void to_json(nlohmann::json& j, const ContentItem& c);
void from_json(const nlohmann::json& j, ContentItem& c);

/// 16 hex digits of FNV-1a/64 over canonical_link '\n' title.
std::string content_id(std::string_view canonical_link, std::string_view title);

class FetchError : public Error {
 public:
  FetchError(std::string source_id, const std::string& what, bool retriable)
      : Error(ErrorKind::io, "fetch " + source_id + ": " + what),
        source_id_(std::move(source_id)),
        retriable_(retriable) {}

  const std::string& source_id() const noexcept { return source_id_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  std::string source_id_;
  bool retriable_;
};

/// GET source.url; returns the body on 2xx. Redirects are followed.
/// Connection failures, timeouts, 5xx and 429 are retriable; other
/// statuses are not.
std::string fetch_feed(const FeedSource& source, int timeout_secs);

using Fetcher = std::function<std::string(const FeedSource&)>;

Fetcher http_fetcher(int timeout_secs);

struct Classification {
  std::string category;
  std::set<std::string> keywords;
  MediaKind media_kind = MediaKind::article;
};

MediaKind media_kind_for(bool has_images, bool has_videos);

/// Category starts at source.category and descends into the child with the
/// most trigger matches in title or body (ties go to the first child in
/// taxonomy order) until no child matches.
Classification classify_item(std::string_view title, std::string_view body_text,
                             bool has_images, bool has_videos,
                             const FeedSource& source, const Taxonomy& taxonomy);

/// Pure part of the pipeline for one item: screen-scrape the description,
/// detect videos, classify, fill in the content id and defaults. Returns
/// nullopt when the item has neither text nor media.
std::optional<ContentItem> prepare_item(const RawItem& raw, const FeedSource& source,
                                        const Taxonomy& taxonomy,
                                        const IngestConfig& config, Timestamp now);

/// As above with the description already screen-scraped.
std::optional<ContentItem> prepare_item(const RawItem& raw, html::Details details,
                                        const FeedSource& source, const Taxonomy& taxonomy,
                                        const IngestConfig& config, Timestamp now);

struct IngestReport {
  std::string source_id;
  std::size_t fetched = 0;  // <item> elements seen
  std::size_t added = 0;
  std::size_t duplicates = 0;
  std::size_t skipped = 0;  // missing title/link or dropped by the quality gate
  std::vector<std::string> errors;
  bool retriable = false;
  std::vector<std::string> new_ids;

  IngestReport& operator+=(const IngestReport& other);
};

void to_json(nlohmann::json& j, const IngestReport& r);

/// fetch -> parse -> details -> classify -> dedupe -> persist for one source.
/// Fetch and parse failures land in the report; nothing is thrown.
IngestReport ingest_source(store::Store& store, const FeedSource& source, Timestamp now,
                           const Fetcher& fetch, const Taxonomy& taxonomy,
                           const IngestConfig& config);

/// Same as ingest_source over several sources; fetch/parse/classify run
/// concurrently, persistence is serialized. Disabled sources are skipped.
std::vector<IngestReport> ingest_sources(store::Store& store,
                                         const std::vector<FeedSource>& sources,
                                         Timestamp now, const Fetcher& fetch,
                                         const Taxonomy& taxonomy,
                                         const IngestConfig& config);

}  // namespace emag
