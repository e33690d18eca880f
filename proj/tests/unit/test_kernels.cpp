#include <gtest/gtest.h>

#include <random>

#include "emag/kernels.hpp"
#include "support.hpp"

using namespace emag;
using namespace testing_support;

namespace {

std::vector<ContentItem> random_items(std::mt19937_64& rng, std::size_t n, Timestamp now) {
  static const char* vocab[] = {"cricket", "golf", "tech", "movies", "opera", "chess", "tennis", "f1"};
  std::uniform_int_distribution<int> pick(0, 7), age(-5, 400), count(0, 4);
  std::vector<ContentItem> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "c" + std::to_string(i);
    out[i].publish_date = now - std::chrono::hours(age(rng));
    for (int k = count(rng); k > 0; --k) out[i].keywords.insert(vocab[pick(rng)]);
  }
  return out;
}

}  // namespace

TEST(Kernels, ScoreItemsParallelMatchesSerial) {
  std::mt19937_64 rng(42);
  Timestamp now = at("2015-06-01T00:00:00Z");
  for (std::size_t n : {0u, 1u, 7u, 1000u}) {
    auto items = random_items(rng, n, now);
    std::vector<const ContentItem*> ptrs;
    for (auto& c : items) ptrs.push_back(&c);
    std::map<std::string, double, std::less<>> high{{"cricket", 0.9}, {"tech", 0.61}, {"f1", 1.0}};
    auto s = kernels::score_items_serial(ptrs, high, now, 72.0);
    auto p = kernels::score_items_parallel(ptrs, high, now, 72.0);
    ASSERT_EQ(s.size(), n);
    EXPECT_EQ(s, p);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(s[i], kernels::score_one(items[i], high, now, 72.0));
  }
}

TEST(Kernels, DetailsBatchParallelMatchesSerial) {
  std::vector<std::string> bodies;
  for (const auto& f : scrape_fixtures())
    if (f.extension() == ".html") bodies.push_back(read_file(f));
  for (int i = 0; i < 50; ++i)
    bodies.push_back("<p>item " + std::to_string(i) + " <a href=\"/a/" + std::to_string(i) +
                     "\">link</a><img src=\"i.png\"></p>");
  std::vector<kernels::Fragment> frags;
  for (const auto& b : bodies) frags.push_back({b, "http://fixtures.example/news/"});
  auto s = kernels::details_batch_serial(frags);
  auto p = kernels::details_batch_parallel(frags);
  ASSERT_EQ(s.size(), frags.size());
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < frags.size(); ++i)
    EXPECT_EQ(s[i], html::description_details(frags[i].html, frags[i].base));
}
