#include <gtest/gtest.h>

#include <csignal>
#include <fstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "emag/error.hpp"
#include "emag/store.hpp"
#include "support.hpp"

using namespace emag;
using namespace emag::store;
using namespace testing_support;
namespace fs = std::filesystem;

TEST(Store, PutGetDelete) {
  auto s = Store::in_memory();
  s->put(kSources, "s1", {{"url", "http://x"}});
  EXPECT_EQ(s->get(kSources, "s1"), (Value{{"url", "http://x"}}));
  EXPECT_FALSE(s->get(kSources, "nope"));
  s->erase(kSources, "s1");
  EXPECT_FALSE(s->get(kSources, "s1"));
  s->erase(kSources, "never");
}

TEST(Store, RejectsBadInput) {
  auto s = Store::in_memory();
  EXPECT_THROW(s->put("bogus", "k", Value::object()), Error);
  EXPECT_THROW(s->put(kUsers, "", Value::object()), Error);
  EXPECT_THROW(s->put(kUsers, "k", 3), Error);
  EXPECT_THROW(s->put(kEvents, "u|1", Value::object()), Error);
  EXPECT_THROW(s->erase(kEvents, "u|1"), Error);
}

TEST(Store, EventSequencesPerUser) {
  auto s = Store::in_memory();
  EXPECT_EQ(s->append_event("a", {{"n", 1}}), 1u);
  EXPECT_EQ(s->append_event("a", {{"n", 2}}), 2u);
  EXPECT_EQ(s->append_event("b", {{"n", 1}}), 1u);
  EXPECT_EQ(s->append_event("a", {{"n", 3}}), 3u);
  auto snap = s->snapshot();
  auto events = snap.scan(kEvents, compose_key("a", ""));
  ASSERT_EQ(events.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(events[i].second->at("seq"), i + 1);
  EXPECT_EQ(snap.last_event_seq("a"), 3u);
  EXPECT_EQ(snap.last_event_seq("zzz"), 0u);
}

TEST(Store, EventKeysSortNumerically) {
  auto s = Store::in_memory();
  for (int i = 0; i < 12; ++i) s->append_event("a", {{"n", i}});
  auto events = s->snapshot().scan(kEvents, compose_key("a", ""));
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].second->at("n"), i);
}

TEST(Store, ConcurrentAppendsHaveNoGaps) {
  auto s = Store::in_memory();
  auto worker = [&](std::string user) {
    for (int i = 0; i < 200; ++i) s->append_event(user, {{"i", i}});
  };
  std::thread t1(worker, "a"), t2(worker, "b");
  t1.join();
  t2.join();
  auto snap = s->snapshot();
  for (auto user : {"a", "b"}) {
    auto ev = snap.scan(kEvents, compose_key(user, ""));
    ASSERT_EQ(ev.size(), 200u);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      EXPECT_EQ(ev[i].second->at("seq"), i + 1);
      EXPECT_EQ(ev[i].second->at("i"), i);
    }
  }
}

TEST(Snapshot, LaterWritesInvisible) {
  auto s = Store::in_memory();
  auto empty = s->snapshot();
  EXPECT_EQ(empty.size(kUsers), 0u);
  EXPECT_TRUE(empty.scan(kUsers).empty());
  s->put(kUsers, "u1", {{"v", 1}});
  auto one = s->snapshot();
  s->put(kUsers, "u1", {{"v", 2}});
  s->put(kUsers, "u2", {{"v", 1}});
  EXPECT_EQ(empty.size(kUsers), 0u);
  EXPECT_EQ(one.get(kUsers, "u1")->at("v"), 1);
  EXPECT_EQ(one.size(kUsers), 1u);
  EXPECT_EQ(s->snapshot().get(kUsers, "u1")->at("v"), 2);
}

TEST(Batch, AtomicCommit) {
  auto s = Store::in_memory();
  WriteBatch b;
  b.put(kContents, "c1", {{"title", "t"}});
  b.put(kContentsByCategory, compose_key("sports", "c1"), Value::object());
  b.append_event("u", {{"kind", "click"}});
  auto r = s->commit(b);
  EXPECT_EQ(r.event_seqs, std::vector<std::uint64_t>{1});
  EXPECT_TRUE(s->get(kContents, "c1"));
  EXPECT_TRUE(s->get(kContentsByCategory, "sports|c1"));
  EXPECT_THROW(compose_key("a|b", "c"), Error);
}

TEST(Durable, ReopenSeesCommittedState) {
  TempDir dir;
  {
    auto s = Store::open(dir.path());
    s->put(kUsers, "u1", {{"email", "a@b.c"}});
    s->append_event("u1", {{"kind", "click"}});
    s->put(kUsers, "u2", {{"email", "x@y.z"}});
    s->erase(kUsers, "u2");
  }
  auto s = Store::open(dir.path());
  EXPECT_EQ(s->get(kUsers, "u1")->at("email"), "a@b.c");
  EXPECT_FALSE(s->get(kUsers, "u2"));
  EXPECT_EQ(s->append_event("u1", {{"kind", "save"}}), 2u);
  EXPECT_TRUE(fs::exists(dir.path() / "wal.log"));
}

TEST(Durable, TornAndCorruptTailsDiscarded) {
  TempDir dir;
  {
    auto s = Store::open(dir.path());
    s->put(kUsers, "u1", {{"v", 1}});
  }
  auto wal = dir.path() / "wal.log";
  auto good = fs::file_size(wal);
  {
    std::ofstream out(wal, std::ios::app | std::ios::binary);
    out << "deadbeef {\"ops\":[[\"put\",\"users\",\"u2\",{\"v\":2}]]}\n";  // bad checksum
    out << "0000";                                                       // torn
  }
  {
    auto s = Store::open(dir.path());
    EXPECT_TRUE(s->get(kUsers, "u1"));
    EXPECT_FALSE(s->get(kUsers, "u2"));
    EXPECT_EQ(fs::file_size(wal), good);
    s->put(kUsers, "u3", {{"v", 3}});
  }
  auto s = Store::open(dir.path());
  EXPECT_TRUE(s->get(kUsers, "u3"));
}

TEST(Durable, CompactionWritesSnapshotAndTruncatesLog) {
  TempDir dir;
  {
    auto s = Store::open(dir.path());
    for (int i = 0; i < 20; ++i) s->put(kUsers, "u" + std::to_string(i), {{"i", i}});
    s->append_event("u1", {{"k", 1}});
    s->compact();
    EXPECT_EQ(fs::file_size(dir.path() / "wal.log"), 0u);
    EXPECT_TRUE(fs::exists(dir.path() / "snapshots" / "0001"));
    s->put(kUsers, "late", {{"i", -1}});
  }
  auto s = Store::open(dir.path());
  EXPECT_EQ(s->snapshot().size(kUsers), 21u);
  EXPECT_EQ(s->append_event("u1", {{"k", 2}}), 2u);
}

TEST(Durable, AutomaticCompactionKeepsNewestSnapshots) {
  TempDir dir;
  Options o;
  o.fsync = false;
  o.compact_after_bytes = 512;
  o.keep_snapshots = 2;
  {
    auto s = Store::open(dir.path(), o);
    for (int i = 0; i < 60; ++i) s->put(kContents, "c" + std::to_string(i), {{"body", std::string(40, 'x')}});
  }
  std::size_t snaps = 0;
  for (auto& e : fs::directory_iterator(dir.path() / "snapshots")) snaps += e.path().extension() != ".tmp";
  EXPECT_LE(snaps, 2u);
  EXPECT_GE(snaps, 1u);
  auto s = Store::open(dir.path(), o);
  EXPECT_EQ(s->snapshot().size(kContents), 60u);
}

TEST(Durable, SurvivesKillMidIngest) {
  TempDir dir;
  pid_t child = fork();
  ASSERT_GE(child, 0);
  if (child == 0) {
    Options o;
    o.fsync = false;
    o.compact_after_bytes = 64 * 1024;
    auto s = Store::open(dir.path(), o);
    for (int i = 0;; ++i) {
      WriteBatch b;
      std::string id = "c" + std::to_string(i);
      b.put(kContents, id, {{"id", id}, {"category", "sports"}, {"body", std::string(200, 'b')}});
      b.put(kContentsByCategory, compose_key("sports", id), {{"content_id", id}});
      s->commit(b);
    }
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  kill(child, SIGKILL);
  int status = 0;
  waitpid(child, &status, 0);
  ASSERT_TRUE(WIFSIGNALED(status));

  auto s = Store::open(dir.path());
  auto snap = s->snapshot();
  auto contents = snap.scan(kContents);
  auto index = snap.scan(kContentsByCategory);
  EXPECT_GT(contents.size(), 0u);
  EXPECT_EQ(contents.size(), index.size());
  for (const auto& [key, value] : contents) {
    EXPECT_EQ(value->at("id"), key);
    EXPECT_EQ(value->at("body").get<std::string>().size(), 200u);
    EXPECT_TRUE(snap.find(kContentsByCategory, compose_key("sports", key))) << key;
  }
  // every id below the highest one present must be present as well
  std::size_t highest = 0;
  for (const auto& [key, value] : contents) highest = std::max<std::size_t>(highest, std::stoul(key.substr(1)));
  EXPECT_EQ(contents.size(), highest + 1);
}

TEST(Dump, RoundTripThroughLoad) {
  auto a = Store::in_memory();
  a->put(kSources, "s1", {{"url", "u"}});
  a->append_event("u1", {{"kind", "click"}});
  a->append_event("u1", {{"kind", "save"}});
  auto dump = a->snapshot().dump();
  EXPECT_EQ(dump.at("format"), "emag-dump");
  EXPECT_EQ(dump.at("version"), 1);
  EXPECT_EQ(dump.at("namespaces").size(), namespaces().size());

  TempDir dir;
  {
    auto b = Store::open(dir.path());
    b->put(kUsers, "stale", {{"x", 1}});
    b->load(dump);
    EXPECT_EQ(b->snapshot().dump(), dump);
    EXPECT_EQ(b->append_event("u1", {{"kind", "share"}}), 3u);
  }
  auto b = Store::open(dir.path());
  EXPECT_FALSE(b->get(kUsers, "stale"));
  EXPECT_TRUE(b->get(kSources, "s1"));
  EXPECT_THROW(b->load(Value{{"format", "other"}}), Error);
}
