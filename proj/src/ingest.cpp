#include "emag/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <future>

#include <httplib.h>

#include "emag/html.hpp"
#include "emag/kernels.hpp"
#include "emag/store.hpp"
#include "emag/url.hpp"

namespace emag {

namespace {

std::vector<std::string> title_tokens(std::string_view title) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() > 3) out.push_back(to_lower(cur));
    cur.clear();
  };
  for (char c : title) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) cur += c;
    else flush();
  }
  flush();
  return out;
}

std::size_t trigger_hits(const Category& c, std::string_view title, std::string_view body) {
  std::size_t hits = 0;
  for (const auto& t : c.triggers)
    if (contains_word(title, t) || contains_word(body, t)) ++hits;
  return hits;
}

}  // namespace

void validate_source(const FeedSource& source, const Taxonomy& taxonomy) {
  if (source.id.empty() || source.id.find('|') != std::string::npos)
    fail(ErrorKind::invalid_argument, "source id must be non-empty and not contain '|'");
  if (!url::is_http_url(source.url))
    fail(ErrorKind::invalid_argument, "source " + source.id + ": not an absolute http(s) URL: " +
                                          source.url);
  if (!taxonomy.contains(source.category))
    fail(ErrorKind::invalid_argument,
         "source " + source.id + ": unknown category '" + source.category + "'");
}

std::string_view to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::article: return "article";
    case MediaKind::image: return "image";
    case MediaKind::video: return "video";
    case MediaKind::mixed: return "mixed";
  }
  return "article";
}

std::optional<MediaKind> media_kind_from_string(std::string_view s) {
  if (s == "article") return MediaKind::article;
  if (s == "image") return MediaKind::image;
  if (s == "video") return MediaKind::video;
  if (s == "mixed") return MediaKind::mixed;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const FeedSource& s) {
  j = {{"id", s.id}, {"url", s.url}, {"category", s.category}, {"enabled", s.enabled},
       {"last_fetched", s.last_fetched ? nlohmann::json(format_iso8601(*s.last_fetched))
                                       : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, FeedSource& s) {
  s.id = j.at("id").get<std::string>();
  s.url = j.at("url").get<std::string>();
  s.category = j.at("category").get<std::string>();
  s.enabled = j.value("enabled", true);
  s.last_fetched.reset();
  if (auto it = j.find("last_fetched"); it != j.end() && it->is_string())
    s.last_fetched = parse_iso8601(it->get<std::string>());
}

void to_json(nlohmann::json& j, const ContentItem& c) {
  j = {{"id", c.id},
       {"title", c.title},
       {"canonical_link", c.canonical_link},
       {"body_text", c.body_text},
       {"links", c.links},
       {"image_urls", c.image_urls},
       {"video_urls", c.video_urls},
       {"publish_date", format_iso8601(c.publish_date)},
       {"fetched_at", format_iso8601(c.fetched_at)},
       {"category", c.category},
       {"media_kind", to_string(c.media_kind)},
       {"source_id", c.source_id},
       {"keywords", c.keywords}};
}

void from_json(const nlohmann::json& j, ContentItem& c) {
  auto time_field = [&](const char* key) {
    auto t = parse_iso8601(j.at(key).get<std::string>());
    if (!t) fail(ErrorKind::invalid_argument, std::string("bad timestamp in ") + key);
    return *t;
  };
  c.id = j.at("id").get<std::string>();
  c.title = j.at("title").get<std::string>();
  c.canonical_link = j.at("canonical_link").get<std::string>();
  c.body_text = j.at("body_text").get<std::string>();
  c.links = j.at("links").get<std::vector<std::string>>();
  c.image_urls = j.at("image_urls").get<std::vector<std::string>>();
  c.video_urls = j.at("video_urls").get<std::vector<std::string>>();
  c.publish_date = time_field("publish_date");
  c.fetched_at = time_field("fetched_at");
  c.category = j.at("category").get<std::string>();
  c.media_kind = media_kind_from_string(j.at("media_kind").get<std::string>())
                     .value_or(MediaKind::article);
  c.source_id = j.at("source_id").get<std::string>();
  c.keywords = j.at("keywords").get<std::set<std::string>>();
}

std::string content_id(std::string_view canonical_link, std::string_view title) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  mix(canonical_link);
  mix("\n");
  mix(title);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fetch_feed(const FeedSource& source, int timeout_secs) {
  if (!source.enabled) throw FetchError(source.id, "source is disabled", false);
  auto parts = url::parse(source.url);
  if (!parts || (parts->scheme != "http" && parts->scheme != "https"))
    throw FetchError(source.id, "not an http(s) URL: " + source.url, false);

  std::string origin = parts->scheme + "://" + parts->host;
  if (parts->port) origin += ":" + std::to_string(parts->port);
  std::string target = parts->path.empty() ? "/" : parts->path;
  if (!parts->query.empty()) target += "?" + parts->query;

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(timeout_secs, 0);
  client.set_read_timeout(timeout_secs, 0);
  client.set_write_timeout(timeout_secs, 0);
  auto res = client.Get(target);
  if (!res) {
    throw FetchError(source.id, httplib::to_string(res.error()), true);
  }
  if (res->status < 200 || res->status >= 300) {
    bool retriable = res->status >= 500 || res->status == 429 || res->status == 408;
    throw FetchError(source.id, "HTTP status " + std::to_string(res->status), retriable);
  }
  return res->body;
}

Fetcher http_fetcher(int timeout_secs) {
  return [timeout_secs](const FeedSource& s) { return fetch_feed(s, timeout_secs); };
}

MediaKind media_kind_for(bool has_images, bool has_videos) {
  if (has_images && has_videos) return MediaKind::mixed;
  if (has_videos) return MediaKind::video;
  if (has_images) return MediaKind::image;
  return MediaKind::article;
}

Classification classify_item(std::string_view title, std::string_view body_text,
                             bool has_images, bool has_videos, const FeedSource& source,
                             const Taxonomy& taxonomy) {
  Classification out;
  out.category = source.category;
  for (;;) {
    const Category* best = nullptr;
    std::size_t best_hits = 0;
    for (const Category* child : taxonomy.children(out.category)) {
      auto hits = trigger_hits(*child, title, body_text);
      if (hits > best_hits) {
        best = child;
        best_hits = hits;
      }
    }
    if (!best) break;
    out.category = best->path;
  }
  for (const auto& c : taxonomy.categories())
    for (const auto& t : c.triggers)
      if (contains_word(title, t) || contains_word(body_text, t)) out.keywords.insert(t);
  for (auto& tok : title_tokens(title)) out.keywords.insert(std::move(tok));
  out.media_kind = media_kind_for(has_images, has_videos);
  return out;
}

std::optional<ContentItem> prepare_item(const RawItem& raw, const FeedSource& source,
                                        const Taxonomy& taxonomy,
                                        const IngestConfig& config, Timestamp now) {
  return prepare_item(raw, html::description_details(raw.description, raw.link), source,
                      taxonomy, config, now);
}

std::optional<ContentItem> prepare_item(const RawItem& raw, html::Details details,
                                        const FeedSource& source, const Taxonomy& taxonomy,
                                        const IngestConfig& config, Timestamp now) {
  ContentItem item;
  item.canonical_link = raw.link;
  item.title = html::strip_text(raw.title);
  item.body_text = std::move(details.text);
  item.links = std::move(details.links);
  item.image_urls = std::move(details.images);

  auto is_video = [&](const std::string& u) {
    auto p = url::parse(u);
    if (!p) return false;
    return std::any_of(config.video_hosts.begin(), config.video_hosts.end(),
                       [&](const std::string& d) { return url::host_matches(p->host, d); });
  };
  for (const auto& l : item.links)
    if (is_video(l)) item.video_urls.push_back(l);
  for (const auto& e : html::extract_embeds(raw.description, item.canonical_link))
    if (is_video(e)) item.video_urls.push_back(e);

  if (item.body_text.empty() && item.image_urls.empty() && item.video_urls.empty())
    return std::nullopt;

  auto cls = classify_item(item.title, item.body_text, !item.image_urls.empty(),
                           !item.video_urls.empty(), source, taxonomy);
  item.category = std::move(cls.category);
  item.keywords = std::move(cls.keywords);
  item.media_kind = cls.media_kind;
  item.id = content_id(item.canonical_link, item.title);
  item.fetched_at = now;
  item.publish_date = raw.publish_date.value_or(now);
  item.source_id = source.id;
  return item;
}

IngestReport& IngestReport::operator+=(const IngestReport& other) {
  fetched += other.fetched;
  added += other.added;
  duplicates += other.duplicates;
  skipped += other.skipped;
  errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  retriable = retriable || other.retriable;
  new_ids.insert(new_ids.end(), other.new_ids.begin(), other.new_ids.end());
  return *this;
}

void to_json(nlohmann::json& j, const IngestReport& r) {
  j = {{"source_id", r.source_id}, {"fetched", r.fetched},      {"new", r.added},
       {"duplicates", r.duplicates}, {"skipped", r.skipped},   {"errors", r.errors},
       {"retriable", r.retriable}};
}

namespace {

struct Prepared {
  IngestReport report;
  std::vector<ContentItem> items;
  bool ok = false;
};

Prepared fetch_and_prepare(const FeedSource& source, Timestamp now, const Fetcher& fetch,
                           const Taxonomy& taxonomy, const IngestConfig& config) {
  Prepared p;
  p.report.source_id = source.id;
  try {
    std::string body = fetch(source);
    ParsedFeed feed = parse_feed(body);
    p.report.fetched = feed.items.size() + feed.skipped;
    p.report.skipped = feed.skipped;
    std::vector<kernels::Fragment> fragments;
    fragments.reserve(feed.items.size());
    for (const auto& raw : feed.items) fragments.push_back({raw.description, raw.link});
    auto details = kernels::details_batch_parallel(fragments);
    for (std::size_t i = 0; i < feed.items.size(); ++i) {
      if (auto item = prepare_item(feed.items[i], std::move(details[i]), source, taxonomy, config, now)) {
        p.items.push_back(std::move(*item));
      } else {
        ++p.report.skipped;
      }
    }
    p.ok = true;
  } catch (const FetchError& e) {
    p.report.errors.push_back(e.what());
    p.report.retriable = e.retriable();
  } catch (const std::exception& e) {
    p.report.errors.push_back("source " + source.id + ": " + e.what());
  }
  return p;
}

void persist(store::Store& store, const FeedSource& source, Timestamp now, Prepared& p) {
  if (!p.ok) return;
  auto snap = store.snapshot();
  store::WriteBatch batch;
  std::set<std::string> in_batch;
  for (auto& item : p.items) {
    if (snap.find(store::kContents, item.id) || !in_batch.insert(item.id).second) {
      ++p.report.duplicates;
      continue;
    }
    batch.put(store::kContents, item.id, nlohmann::json(item));
    batch.put(store::kContentsByCategory, store::compose_key(item.category, item.id),
              {{"content_id", item.id}});
    p.report.new_ids.push_back(item.id);
    ++p.report.added;
  }
  FeedSource updated = source;
  if (auto stored = snap.find(store::kSources, source.id)) updated = stored->get<FeedSource>();
  updated.last_fetched = now;
  batch.put(store::kSources, updated.id, nlohmann::json(updated));
  try {
    store.commit(batch);
  } catch (const std::exception& e) {
    p.report.errors.push_back("source " + source.id + ": " + e.what());
    p.report.added = 0;
    p.report.new_ids.clear();
  }
}

}  // namespace

IngestReport ingest_source(store::Store& store, const FeedSource& source, Timestamp now,
                           const Fetcher& fetch, const Taxonomy& taxonomy,
                           const IngestConfig& config) {
  if (!source.enabled) {
    IngestReport r;
    r.source_id = source.id;
    r.errors.push_back("source " + source.id + " is disabled");
    return r;
  }
  Prepared p = fetch_and_prepare(source, now, fetch, taxonomy, config);
  persist(store, source, now, p);
  return p.report;
}

std::vector<IngestReport> ingest_sources(store::Store& store,
                                         const std::vector<FeedSource>& sources,
                                         Timestamp now, const Fetcher& fetch,
                                         const Taxonomy& taxonomy,
                                         const IngestConfig& config) {
  std::vector<const FeedSource*> enabled;
  for (const auto& s : sources)
    if (s.enabled) enabled.push_back(&s);

  std::vector<std::future<Prepared>> pending;
  pending.reserve(enabled.size());
  for (const FeedSource* s : enabled) {
    pending.push_back(std::async(std::launch::async, [&, s] {
      return fetch_and_prepare(*s, now, fetch, taxonomy, config);
    }));
  }
  std::vector<IngestReport> reports;
  for (std::size_t i = 0; i < enabled.size(); ++i) {
    Prepared p = pending[i].get();
    persist(store, *enabled[i], now, p);
    reports.push_back(std::move(p.report));
  }
  return reports;
}

}  // namespace emag
