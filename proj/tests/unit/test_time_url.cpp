#include <gtest/gtest.h>

#include "emag/time.hpp"
#include "emag/url.hpp"
#include "support.hpp"

using namespace emag;
using testing_support::at;

TEST(Iso8601, RoundTrip) {
  auto t = parse_iso8601("2015-03-02T10:30:00Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(to_unix(*t), 1425292200);
  EXPECT_EQ(format_iso8601(*t), "2015-03-02T10:30:00Z");
}

TEST(Iso8601, DateOnlyAndOffsets) {
  EXPECT_EQ(format_iso8601(*parse_iso8601("2015-03-02")), "2015-03-02T00:00:00Z");
  EXPECT_EQ(format_iso8601(*parse_iso8601("2015-03-02T16:00:00+05:30")), "2015-03-02T10:30:00Z");
  EXPECT_EQ(format_iso8601(*parse_iso8601("2015-03-02T05:30:00-05:00")), "2015-03-02T10:30:00Z");
}

TEST(Iso8601, RejectsGarbage) {
  EXPECT_FALSE(parse_iso8601(""));
  EXPECT_FALSE(parse_iso8601("yesterday"));
  EXPECT_FALSE(parse_iso8601("2015-13-01"));
  EXPECT_FALSE(parse_iso8601("2015-02-30"));
}

TEST(Rfc822, CommonForms) {
  EXPECT_EQ(format_iso8601(*parse_rfc822("Tue, 10 Jun 2003 04:00:00 GMT")), "2003-06-10T04:00:00Z");
  EXPECT_EQ(format_iso8601(*parse_rfc822("10 Jun 2003 04:00 +0200")), "2003-06-10T02:00:00Z");
  EXPECT_EQ(format_iso8601(*parse_rfc822("Fri, 06 Mar 2015 09:15:00 EST")), "2015-03-06T14:15:00Z");
  EXPECT_EQ(format_iso8601(*parse_rfc822("Sat, 07 Mar 15 20:00:00 +0530")), "2015-03-07T14:30:00Z");
}

TEST(Rfc822, RejectsGarbage) {
  EXPECT_FALSE(parse_rfc822(""));
  EXPECT_FALSE(parse_rfc822("not a date"));
  EXPECT_FALSE(parse_rfc822("10 Foo 2003 04:00 GMT"));
  EXPECT_FALSE(parse_rfc822("10 Jun 2003 04:00 XYZ"));
}

TEST(HoursBetween, SignedHours) {
  EXPECT_DOUBLE_EQ(hours_between(at("2015-01-01T00:00:00Z"), at("2015-01-04T00:00:00Z")), 72.0);
  EXPECT_DOUBLE_EQ(hours_between(at("2015-01-01T01:30:00Z"), at("2015-01-01T00:00:00Z")), -1.5);
}

TEST(Url, Parse) {
  auto p = url::parse("HTTP://Example.COM:8080/a/b?x=1#frag");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->scheme, "http");
  EXPECT_EQ(p->host, "example.com");
  EXPECT_EQ(p->port, 8080);
  EXPECT_EQ(p->path, "/a/b");
  EXPECT_EQ(p->query, "x=1");
  EXPECT_EQ(p->fragment, "frag");
  EXPECT_FALSE(url::parse("/relative/path"));
  EXPECT_FALSE(url::parse("mailto:someone@example.com"));
}

TEST(Url, IsHttp) {
  EXPECT_TRUE(url::is_http_url("http://a.example/"));
  EXPECT_TRUE(url::is_http_url("https://a.example"));
  EXPECT_FALSE(url::is_http_url("ftp://a.example/"));
  EXPECT_FALSE(url::is_http_url("http://"));
  EXPECT_FALSE(url::is_http_url("a.example/feed"));
}

// Reference resolution examples from RFC 3986 section 5.4.
TEST(Url, ResolveRfcExamples) {
  const char* base = "http://a/b/c/d;p?q";
  const std::pair<const char*, const char*> cases[] = {
      {"g", "http://a/b/c/g"},        {"./g", "http://a/b/c/g"},
      {"g/", "http://a/b/c/g/"},      {"/g", "http://a/g"},
      {"//g", "http://g"},            {"?y", "http://a/b/c/d;p?y"},
      {"g?y", "http://a/b/c/g?y"},    {"#s", "http://a/b/c/d;p?q#s"},
      {"g#s", "http://a/b/c/g#s"},    {";x", "http://a/b/c/;x"},
      {"", "http://a/b/c/d;p?q"},     {".", "http://a/b/c/"},
      {"./", "http://a/b/c/"},        {"..", "http://a/b/"},
      {"../", "http://a/b/"},         {"../g", "http://a/b/g"},
      {"../..", "http://a/"},         {"../../g", "http://a/g"},
      {"../../../g", "http://a/g"},   {"/./g", "http://a/g"},
      {"/../g", "http://a/g"},        {"g.", "http://a/b/c/g."},
      {"g..", "http://a/b/c/g.."},    {"./../g", "http://a/b/g"},
      {"g/../h", "http://a/b/c/h"},   {"https://other/x", "https://other/x"},
  };
  for (auto [ref, want] : cases) EXPECT_EQ(url::resolve(base, ref), want) << ref;
}

TEST(Url, ResolveWithoutAbsoluteBaseIsVerbatim) {
  EXPECT_EQ(url::resolve("", "rel/x.html"), "rel/x.html");
  EXPECT_EQ(url::resolve("not a url", "rel/x.html"), "rel/x.html");
}

TEST(Url, HostMatches) {
  EXPECT_TRUE(url::host_matches("youtube.com", "youtube.com"));
  EXPECT_TRUE(url::host_matches("www.youtube.com", "youtube.com"));
  EXPECT_FALSE(url::host_matches("notyoutube.com", "youtube.com"));
  EXPECT_FALSE(url::host_matches("youtube.com.evil.example", "youtube.com"));
}
