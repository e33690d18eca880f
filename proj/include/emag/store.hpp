#pragma once

#include <cstdint>
#include <filesystem>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace emag::store {

using Value = nlohmann::json;

inline constexpr std::string_view kSources = "sources";
inline constexpr std::string_view kContents = "contents";
inline constexpr std::string_view kContentsByCategory = "contents_by_category";
inline constexpr std::string_view kUsers = "users";
inline constexpr std::string_view kInterests = "interests";
inline constexpr std::string_view kEvents = "events";
inline constexpr std::string_view kSaved = "saved";
inline constexpr std::string_view kRatings = "ratings";
inline constexpr std::string_view kDecompositions = "decomposition_blobs";
inline constexpr std::string_view kKeywordCategoryCache = "keyword_category_cache";

const std::vector<std::string>& namespaces();

/// Composite keys join their parts with '|'; parts must not contain it.
std::string compose_key(std::string_view a, std::string_view b);

std::string event_key(std::string_view user, std::uint64_t seq);

using Table = std::map<std::string, std::shared_ptr<const Value>, std::less<>>;

struct State {
  std::map<std::string, std::shared_ptr<const Table>, std::less<>> tables;
  std::map<std::string, std::uint64_t, std::less<>> last_event_seq;
};

/// Immutable view of the store at one commit. Cheap to copy and safe to hand
/// to other threads; later writes are never visible through it.
class Snapshot {
 public:
  Snapshot() : state_(std::make_shared<State>()) {}
  explicit Snapshot(std::shared_ptr<const State> state) : state_(std::move(state)) {}

  std::optional<Value> get(std::string_view ns, std::string_view key) const;
  const Value* find(std::string_view ns, std::string_view key) const;

  /// Records whose key starts with prefix, in key order.
  std::vector<std::pair<std::string, const Value*>> scan(std::string_view ns,
                                                        std::string_view prefix = {}) const;
  std::size_t size(std::string_view ns) const;
  std::uint64_t last_event_seq(std::string_view user) const;

  /// {"format": "emag-dump", "version": 1, "namespaces": {ns: {key: value}}}
  Value dump() const;

 private:
  const Table* table(std::string_view ns) const;
  std::shared_ptr<const State> state_;
};

class WriteBatch {
 public:
  void put(std::string_view ns, std::string key, Value value);
  void erase(std::string_view ns, std::string key);
  /// Appends to the user's event log; the sequence number is assigned at
  /// commit and returned in CommitResult in append order.
  void append_event(std::string user, Value event);

  bool empty() const { return ops_.empty(); }

 private:
  friend class Store;
  enum class Op { put, erase, event };
  struct Entry {
    Op op;
    std::string ns;
    std::string key;
    Value value;
  };
  std::vector<Entry> ops_;
};

struct CommitResult {
  std::vector<std::uint64_t> event_seqs;
};

struct Options {
  bool fsync = true;
  std::uintmax_t compact_after_bytes = 8u << 20;
  std::size_t keep_snapshots = 2;
};

/// Embedded namespaced key/value store. With a data directory every commit
/// is appended to data/wal.log (one CRC-checked line per batch) before it is
/// published; data/snapshots/NNNN hold compacted states. Writers are
/// serialized; readers take snapshots.
class Store {
 public:
  static std::unique_ptr<Store> open(const std::filesystem::path& dir, Options options = {});
  static std::unique_ptr<Store> in_memory();

  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  Snapshot snapshot() const;

  std::optional<Value> get(std::string_view ns, std::string_view key) const {
    return snapshot().get(ns, key);
  }
  void put(std::string_view ns, std::string key, Value value);
  void erase(std::string_view ns, std::string key);
  std::uint64_t append_event(std::string user, Value event);

  /// Applies the batch atomically: all of it is durable and visible, or none.
  CommitResult commit(const WriteBatch& batch);

  /// Writes a snapshot file and truncates the log. No-op in memory.
  void compact();

  /// Replaces the entire contents with a dump produced by Snapshot::dump.
  void load(const Value& dump);

  const std::filesystem::path& directory() const { return dir_; }

 private:
  Store(std::filesystem::path dir, Options options);
  void recover();
  void open_wal(bool truncate);
  void write_snapshot_file(const State& state);

  std::filesystem::path dir_;
  Options options_;
  mutable std::mutex publish_mutex_;
  std::mutex writer_mutex_;
  std::shared_ptr<const State> state_;
  std::FILE* wal_ = nullptr;
  std::uintmax_t wal_bytes_ = 0;
  std::uint64_t snapshot_number_ = 0;
};

}  // namespace emag::store
