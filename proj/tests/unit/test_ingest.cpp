#include <gtest/gtest.h>

#include "emag/error.hpp"
#include "emag/ingest.hpp"
#include "emag/store.hpp"
#include "emag/taxonomy.hpp"
#include "support.hpp"

using namespace emag;
using namespace testing_support;

namespace {

const char* kThreeItems = R"(<?xml version="1.0"?><rss version="2.0"><channel><title>c</title>
<item><title>Cricket final tonight</title><link>http://c.example/1</link><description>&lt;p&gt;Big wicket haul&lt;/p&gt;</description><pubDate>Mon, 02 Mar 2015 10:30:00 GMT</pubDate></item>
<item><title>Golf roundup</title><link>http://c.example/2</link><description>Par golf</description></item>
<item><title>Stadium photos</title><link>http://c.example/3</link><description><![CDATA[<img src="/p.jpg">]]></description></item>
</channel></rss>)";

const char* kOneMissingLink = R"(<rss><channel>
<item><title>One</title><link>http://m.example/1</link><description>x</description></item>
<item><title>Two</title><description>no link</description></item>
<item><title>Three</title><link>http://m.example/3</link><description>y</description></item>
</channel></rss>)";

FeedSource src(const std::string& id, const std::string& url, const std::string& cat = "sports") {
  return FeedSource{id, url, cat, std::nullopt, true};
}

Fetcher canned(std::map<std::string, std::string> bodies) {
  return [bodies](const FeedSource& s) {
    auto it = bodies.find(s.url);
    if (it == bodies.end()) throw FetchError(s.id, "HTTP 404", false);
    return it->second;
  };
}

const Timestamp kNow = at("2015-03-05T00:00:00Z");

}  // namespace

TEST(ValidateSource, Rules) {
  auto tax = Taxonomy::builtin();
  EXPECT_NO_THROW(validate_source(src("a", "http://x.example/feed", "technology/mobile"), tax));
  EXPECT_THROW(validate_source(src("a", "x.example/feed"), tax), Error);
  EXPECT_THROW(validate_source(src("a", "ftp://x.example/feed"), tax), Error);
  EXPECT_THROW(validate_source(src("a", "http://x.example/", "nope/none"), tax), Error);
  EXPECT_THROW(validate_source(src("", "http://x.example/"), tax), Error);
}

TEST(ContentId, DeterministicAndSensitive) {
  EXPECT_EQ(content_id("http://a/", "t"), content_id("http://a/", "t"));
  EXPECT_NE(content_id("http://a/", "t"), content_id("http://a/", "u"));
  EXPECT_NE(content_id("http://a/x", "t"), content_id("http://a/", "xt"));
  EXPECT_EQ(content_id("http://a/", "t").size(), 16u);
  // FNV-1a 64 over the single byte "\n".
  EXPECT_EQ(content_id("", ""), "af63c74c8601c8dd");
}

TEST(Classify, RefinesToChildOnTrigger) {
  auto tax = Taxonomy::builtin();
  auto c = classify_item("New Android release", "", false, false, src("s", "http://t/", "technology"), tax);
  EXPECT_EQ(c.category, "technology/mobile");
  EXPECT_TRUE(c.keywords.count("android"));
  EXPECT_TRUE(c.keywords.count("release"));
  EXPECT_FALSE(c.keywords.count("new"));  // three characters
}

TEST(Classify, NoTriggerKeepsSourceCategory) {
  auto tax = Taxonomy::builtin();
  auto c = classify_item("Quarterly numbers", "nothing relevant", false, false,
                         src("s", "http://t/", "technology"), tax);
  EXPECT_EQ(c.category, "technology");
}

TEST(Classify, WordBoundaryAndCaseInsensitive) {
  auto tax = Taxonomy::builtin();
  auto c = classify_item("x", "GOLFING is not GOLF", false, false, src("s", "http://t/", "sports"), tax);
  EXPECT_EQ(c.category, "sports/golf");
  auto d = classify_item("x", "golfing only", false, false, src("s", "http://t/", "sports"), tax);
  EXPECT_EQ(d.category, "sports");
}

TEST(Classify, MultiWordTrigger) {
  auto tax = Taxonomy::builtin();
  auto c = classify_item("Legends", "An interview with Sachin Tendulkar.", false, false,
                         src("s", "http://t/", "sports"), tax);
  EXPECT_EQ(c.category, "sports/cricket");
  EXPECT_TRUE(c.keywords.count("sachin tendulkar"));
}

TEST(Classify, TriggerFromOtherBranchStillAKeyword) {
  auto tax = Taxonomy::builtin();
  auto c = classify_item("Cricket on mobile", "", false, false, src("s", "http://t/", "sports"), tax);
  EXPECT_EQ(c.category, "sports/cricket");
  EXPECT_TRUE(c.keywords.count("mobile"));
}

TEST(MediaKind, Rules) {
  EXPECT_EQ(media_kind_for(false, false), MediaKind::article);
  EXPECT_EQ(media_kind_for(true, false), MediaKind::image);
  EXPECT_EQ(media_kind_for(false, true), MediaKind::video);
  EXPECT_EQ(media_kind_for(true, true), MediaKind::mixed);
}

TEST(PrepareItem, OneImageNoVideoIsImage) {
  RawItem raw{"Photo", "http://p.example/a/b", R"(<img src="x.jpg">caption)", std::nullopt};
  auto item = prepare_item(raw, src("s", "http://p.example/feed"), Taxonomy::builtin(), {}, kNow);
  ASSERT_TRUE(item);
  EXPECT_EQ(item->media_kind, MediaKind::image);
  EXPECT_EQ(item->image_urls, std::vector<std::string>{"http://p.example/a/x.jpg"});
  EXPECT_EQ(item->publish_date, kNow);  // missing pubDate defaults to fetched_at
  EXPECT_EQ(item->fetched_at, kNow);
  EXPECT_EQ(item->id, content_id("http://p.example/a/b", "Photo"));
}

TEST(PrepareItem, VideoHostsFromAnchorsAndIframes) {
  RawItem raw{"Clip", "http://v.example/",
              R"(<a href="https://www.youtube.com/watch?v=1">yt</a><iframe src="https://player.vimeo.com/video/2"></iframe><a href="http://other.example/">o</a>)",
              std::nullopt};
  auto item = prepare_item(raw, src("s", "http://v.example/feed"), Taxonomy::builtin(), {}, kNow);
  ASSERT_TRUE(item);
  EXPECT_EQ(item->video_urls, (std::vector<std::string>{"https://www.youtube.com/watch?v=1",
                                                        "https://player.vimeo.com/video/2"}));
  EXPECT_EQ(item->media_kind, MediaKind::video);
}

TEST(PrepareItem, VideoAllowlistConfigurable) {
  RawItem raw{"Clip", "http://v.example/", R"(<a href="https://clips.example/1">c</a>)", std::nullopt};
  IngestConfig cfg;
  cfg.video_hosts = {"clips.example"};
  auto item = prepare_item(raw, src("s", "http://v.example/feed"), Taxonomy::builtin(), cfg, kNow);
  ASSERT_TRUE(item);
  EXPECT_EQ(item->media_kind, MediaKind::video);
}

TEST(PrepareItem, QualityGateDropsEmptyItems) {
  RawItem raw{"Empty", "http://e.example/", "<p> </p><script>x</script>", std::nullopt};
  EXPECT_FALSE(prepare_item(raw, src("s", "http://e.example/feed"), Taxonomy::builtin(), {}, kNow));
}

TEST(PrepareItem, BodyHasNoMarkup) {
  RawItem raw{"T", "http://e.example/", "<div><b>bold</b> &amp; <i>it</i></div>", std::nullopt};
  auto item = prepare_item(raw, src("s", "http://e.example/feed"), Taxonomy::builtin(), {}, kNow);
  ASSERT_TRUE(item);
  EXPECT_EQ(item->body_text, "bold & it");
}

TEST(ContentItemJson, RoundTrip) {
  RawItem raw{"Cricket news", "http://e.example/", R"(<a href="x">l</a><img src="i.png">text)",
              at("2015-01-01T00:00:00Z")};
  auto item = prepare_item(raw, src("s", "http://e.example/feed"), Taxonomy::builtin(), {}, kNow);
  ASSERT_TRUE(item);
  nlohmann::json j = *item;
  auto back = j.get<ContentItem>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(j.at("media_kind"), "image");
}

TEST(FetchFeed, ServesBody) {
  FixtureServer server;
  server.set("/feed.xml", {200, kThreeItems});
  auto body = fetch_feed(src("s", server.url("/feed.xml")), 5);
  EXPECT_EQ(body, kThreeItems);
  EXPECT_EQ(parse_feed(body).items.size(), 3u);
}

TEST(FetchFeed, NotFoundIsNotRetriable) {
  FixtureServer server;
  try {
    fetch_feed(src("s404", server.url("/missing.xml")), 5);
    FAIL();
  } catch (const FetchError& e) {
    EXPECT_FALSE(e.retriable());
    EXPECT_EQ(e.source_id(), "s404");
    EXPECT_NE(std::string(e.what()).find("404"), std::string::npos);
  }
}

TEST(FetchFeed, ServerErrorIsRetriable) {
  FixtureServer server;
  server.set("/boom", {503, "down"});
  try {
    fetch_feed(src("s", server.url("/boom")), 5);
    FAIL();
  } catch (const FetchError& e) {
    EXPECT_TRUE(e.retriable());
  }
}

TEST(FetchFeed, ConnectionRefusedIsRetriable) {
  auto url = "http://127.0.0.1:" + std::to_string(closed_port()) + "/feed";
  try {
    fetch_feed(src("down", url), 2);
    FAIL();
  } catch (const FetchError& e) {
    EXPECT_TRUE(e.retriable());
    EXPECT_EQ(e.source_id(), "down");
  }
}

TEST(IngestSource, FreshThenDuplicate) {
  auto store = store::Store::in_memory();
  FixtureServer server;
  server.set("/feed.xml", {200, kThreeItems});
  auto s = src("s1", server.url("/feed.xml"));
  auto tax = Taxonomy::builtin();
  auto fetch = http_fetcher(5);

  auto r1 = ingest_source(*store, s, kNow, fetch, tax, {});
  EXPECT_EQ(r1.fetched, 3u);
  EXPECT_EQ(r1.added, 3u);
  EXPECT_EQ(r1.duplicates, 0u);
  EXPECT_TRUE(r1.errors.empty());
  EXPECT_EQ(store->snapshot().size(store::kContents), 3u);

  auto r2 = ingest_source(*store, s, kNow, fetch, tax, {});
  EXPECT_EQ(r2.added, 0u);
  EXPECT_EQ(r2.duplicates, 3u);
  EXPECT_EQ(store->snapshot().size(store::kContents), 3u);
}

TEST(IngestSource, MissingLinkCountsSkipped) {
  auto store = store::Store::in_memory();
  auto r = ingest_source(*store, src("m", "http://m.example/feed"), kNow,
                         canned({{"http://m.example/feed", kOneMissingLink}}), Taxonomy::builtin(), {});
  EXPECT_EQ(r.fetched, 3u);
  EXPECT_EQ(r.added, 2u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(IngestSource, IndexesCategoryAndStampsSource) {
  auto store = store::Store::in_memory();
  auto s = src("s1", "http://c.example/feed");
  store->put(store::kSources, s.id, nlohmann::json(s));
  auto r = ingest_source(*store, s, kNow, canned({{s.url, kThreeItems}}), Taxonomy::builtin(), {});
  ASSERT_EQ(r.added, 3u);
  auto snap = store->snapshot();
  for (const auto& id : r.new_ids) {
    auto item = snap.get(store::kContents, id)->get<ContentItem>();
    EXPECT_TRUE(snap.find(store::kContentsByCategory, store::compose_key(item.category, id)));
  }
  auto stored = snap.get(store::kSources, "s1")->get<FeedSource>();
  ASSERT_TRUE(stored.last_fetched);
  EXPECT_EQ(*stored.last_fetched, kNow);
  auto first = snap.get(store::kContents, content_id("http://c.example/1", "Cricket final tonight"));
  ASSERT_TRUE(first);
  EXPECT_EQ(first->at("category"), "sports/cricket");
}

TEST(IngestSource, FetchFailureLeavesStoreUntouched) {
  auto store = store::Store::in_memory();
  auto s = src("s1", "http://gone.example/feed");
  store->put(store::kSources, s.id, nlohmann::json(s));
  auto before = store->snapshot().dump();
  auto r = ingest_source(*store, s, kNow, canned({}), Taxonomy::builtin(), {});
  EXPECT_EQ(r.errors.size(), 1u);
  EXPECT_FALSE(r.retriable);
  EXPECT_EQ(store->snapshot().dump(), before);
}

TEST(IngestSource, MalformedXmlReported) {
  auto store = store::Store::in_memory();
  auto s = src("bad", "http://bad.example/feed");
  auto r = ingest_source(*store, s, kNow, canned({{s.url, "<rss><channel>"}}), Taxonomy::builtin(), {});
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find("byte"), std::string::npos);
  EXPECT_EQ(store->snapshot().size(store::kContents), 0u);
}

TEST(IngestSources, OneFailureDoesNotAbortOthersAndDisabledSkipped) {
  auto store = store::Store::in_memory();
  auto good = src("good", "http://g.example/feed");
  auto bad = src("bad", "http://b.example/feed");
  auto off = src("off", "http://o.example/feed");
  off.enabled = false;
  auto fetch = canned({{good.url, kThreeItems}, {off.url, kOneMissingLink}});
  auto reports = ingest_sources(*store, {good, bad, off}, kNow, fetch, Taxonomy::builtin(), {});
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].source_id, "good");
  EXPECT_EQ(reports[0].added, 3u);
  EXPECT_EQ(reports[1].source_id, "bad");
  EXPECT_FALSE(reports[1].errors.empty());
  EXPECT_EQ(store->snapshot().size(store::kContents), 3u);
}

TEST(IngestReportJson, UsesNewKey) {
  IngestReport r;
  r.source_id = "s";
  r.added = 2;
  nlohmann::json j = r;
  EXPECT_EQ(j.at("new"), 2);
  EXPECT_FALSE(j.contains("added"));
}

TEST(IngestCorpus, EveryFeedFixtureIngestsIdempotently) {
  for (const auto& f : scrape_fixtures()) {
    if (f.extension() != ".xml") continue;
    auto store = store::Store::in_memory();
    auto s = src("fx", "http://fixtures.example/feed");
    auto fetch = canned({{s.url, read_file(f)}});
    ingest_source(*store, s, kNow, fetch, Taxonomy::builtin(), {});
    auto n = store->snapshot().size(store::kContents);
    ingest_source(*store, s, kNow, fetch, Taxonomy::builtin(), {});
    EXPECT_EQ(store->snapshot().size(store::kContents), n) << f;
    for (const auto& [key, value] : store->snapshot().scan(store::kContents)) {
      auto body = value->at("body_text").get<std::string>();
      EXPECT_EQ(body.find("<p>"), std::string::npos) << f;
    }
  }
}
