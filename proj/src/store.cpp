#include "emag/store.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include "emag/error.hpp"

namespace emag::store {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFormat = "emag-dump";

std::uint32_t checksum(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

void require_namespace(std::string_view ns) {
  const auto& all = namespaces();
  if (std::find(all.begin(), all.end(), ns) == all.end())
    fail(ErrorKind::invalid_argument, "unknown namespace '" + std::string(ns) + "'");
}

void validate_put(std::string_view ns, std::string_view key, const Value& value) {
  require_namespace(ns);
  if (key.empty()) fail(ErrorKind::invalid_argument, "empty key in " + std::string(ns));
  if (!value.is_object())
    fail(ErrorKind::invalid_argument, "value for " + std::string(ns) + "/" +
                                          std::string(key) + " is not an object");
}

void sync_file(std::FILE* f) {
  std::fflush(f);
  ::fsync(::fileno(f));
}

void sync_directory(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

// Applies one decoded WAL/batch op list to a mutable copy of the state.
class Mutator {
 public:
  explicit Mutator(const State& base) : state_(base) {}

  Table& table(const std::string& ns) {
    auto it = copied_.find(ns);
    if (it != copied_.end()) return *it->second;
    auto existing = state_.tables.find(ns);
    auto fresh = existing == state_.tables.end() ? std::make_shared<Table>()
                                                 : std::make_shared<Table>(*existing->second);
    Table& ref = *fresh;
    copied_.emplace(ns, fresh);
    state_.tables[ns] = fresh;
    return ref;
  }

  void put(const std::string& ns, const std::string& key, Value value) {
    table(ns)[key] = std::make_shared<const Value>(std::move(value));
    if (ns == kEvents) note_event_key(key);
  }

  void erase(const std::string& ns, const std::string& key) { table(ns).erase(key); }

  std::uint64_t next_seq(const std::string& user) { return ++state_.last_event_seq[user]; }

  void note_event_key(const std::string& key) {
    auto bar = key.rfind('|');
    if (bar == std::string::npos) return;
    auto user = key.substr(0, bar);
    std::uint64_t seq = std::stoull(key.substr(bar + 1));
    auto& last = state_.last_event_seq[user];
    last = std::max(last, seq);
  }

  State release() { return std::move(state_); }

 private:
  State state_;
  std::map<std::string, std::shared_ptr<Table>> copied_;
};

Value dump_state(const State& state) {
  Value spaces = Value::object();
  for (const auto& ns : namespaces()) {
    Value records = Value::object();
    if (auto it = state.tables.find(ns); it != state.tables.end()) {
      for (const auto& [key, value] : *it->second) records[key] = *value;
    }
    spaces[ns] = std::move(records);
  }
  return Value{{"format", kFormat}, {"version", 1}, {"namespaces", std::move(spaces)}};
}

State state_from_dump(const Value& dump) {
  if (!dump.is_object() || dump.value("format", "") != kFormat || !dump.contains("namespaces"))
    fail(ErrorKind::invalid_argument, "not an emag dump");
  Mutator m{State{}};
  for (const auto& [ns, records] : dump.at("namespaces").items()) {
    require_namespace(ns);
    for (const auto& [key, value] : records.items()) {
      validate_put(ns, key, value);
      m.put(ns, key, value);
    }
  }
  return m.release();
}

}  // namespace

const std::vector<std::string>& namespaces() {
  static const std::vector<std::string> kAll = {
      std::string(kSources),   std::string(kContents),
      std::string(kContentsByCategory), std::string(kUsers),
      std::string(kInterests), std::string(kEvents),
      std::string(kSaved),     std::string(kRatings),
      std::string(kDecompositions), std::string(kKeywordCategoryCache)};
  return kAll;
}

std::string compose_key(std::string_view a, std::string_view b) {
  if (a.find('|') != std::string_view::npos)
    fail(ErrorKind::invalid_argument, "key part contains '|': " + std::string(a));
  std::string k(a);
  k += '|';
  k += b;
  return k;
}

std::string event_key(std::string_view user, std::uint64_t seq) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%012" PRIu64, seq);
  return compose_key(user, buf);
}

// --- Snapshot ---------------------------------------------------------------

const Table* Snapshot::table(std::string_view ns) const {
  auto it = state_->tables.find(ns);
  return it == state_->tables.end() ? nullptr : it->second.get();
}

std::optional<Value> Snapshot::get(std::string_view ns, std::string_view key) const {
  if (const Value* v = find(ns, key)) return std::optional<Value>(std::in_place, *v);
  return std::nullopt;
}

const Value* Snapshot::find(std::string_view ns, std::string_view key) const {
  const Table* t = table(ns);
  if (!t) return nullptr;
  auto it = t->find(key);
  return it == t->end() ? nullptr : it->second.get();
}

std::vector<std::pair<std::string, const Value*>> Snapshot::scan(std::string_view ns,
                                                                std::string_view prefix) const {
  std::vector<std::pair<std::string, const Value*>> out;
  const Table* t = table(ns);
  if (!t) return out;
  for (auto it = t->lower_bound(prefix); it != t->end(); ++it) {
    if (!std::string_view(it->first).starts_with(prefix)) break;
    out.emplace_back(it->first, it->second.get());
  }
  return out;
}

std::size_t Snapshot::size(std::string_view ns) const {
  const Table* t = table(ns);
  return t ? t->size() : 0;
}

std::uint64_t Snapshot::last_event_seq(std::string_view user) const {
  auto it = state_->last_event_seq.find(user);
  return it == state_->last_event_seq.end() ? 0 : it->second;
}

Value Snapshot::dump() const { return dump_state(*state_); }

// --- WriteBatch -------------------------------------------------------------

void WriteBatch::put(std::string_view ns, std::string key, Value value) {
  validate_put(ns, key, value);
  if (ns == kEvents) fail(ErrorKind::contract, "the event log is append-only");
  ops_.push_back({Op::put, std::string(ns), std::move(key), std::move(value)});
}

void WriteBatch::erase(std::string_view ns, std::string key) {
  require_namespace(ns);
  if (ns == kEvents) fail(ErrorKind::contract, "the event log is append-only");
  ops_.push_back({Op::erase, std::string(ns), std::move(key), {}});
}

void WriteBatch::append_event(std::string user, Value event) {
  if (user.empty() || user.find('|') != std::string::npos)
    fail(ErrorKind::invalid_argument, "bad user id for event");
  if (!event.is_object()) fail(ErrorKind::invalid_argument, "event is not an object");
  ops_.push_back({Op::event, std::string(kEvents), std::move(user), std::move(event)});
}

// --- Store ------------------------------------------------------------------

Store::Store(fs::path dir, Options options)
    : dir_(std::move(dir)), options_(options), state_(std::make_shared<State>()) {}

Store::~Store() {
  if (wal_) std::fclose(wal_);
}

std::unique_ptr<Store> Store::in_memory() {
  return std::unique_ptr<Store>(new Store({}, Options{}));
}

std::unique_ptr<Store> Store::open(const fs::path& dir, Options options) {
  std::unique_ptr<Store> s(new Store(dir, options));
  std::error_code ec;
  fs::create_directories(dir / "snapshots", ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  s->recover();
  return s;
}

void Store::recover() {
  State base;
  // newest readable snapshot wins
  std::vector<std::pair<std::uint64_t, fs::path>> snaps;
  for (const auto& entry : fs::directory_iterator(dir_ / "snapshots")) {
    auto name = entry.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
    snaps.emplace_back(std::stoull(name), entry.path());
  }
  std::sort(snaps.rbegin(), snaps.rend());
  for (const auto& [number, path] : snaps) {
    std::ifstream in(path);
    Value dump = Value::parse(in, nullptr, /*allow_exceptions=*/false);
    if (dump.is_discarded()) continue;
    base = state_from_dump(dump);
    snapshot_number_ = number;
    break;
  }

  Mutator m{base};
  auto wal_path = dir_ / "wal.log";
  std::uintmax_t good_bytes = 0;
  if (fs::exists(wal_path)) {
    std::ifstream in(wal_path, std::ios::binary);
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < contents.size()) {
      auto nl = contents.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final record
      std::string_view line(contents.data() + pos, nl - pos);
      if (line.size() < 10 || line[8] != ' ') break;
      auto payload = line.substr(9);
      std::uint32_t expected = 0;
      if (std::sscanf(std::string(line.substr(0, 8)).c_str(), "%8" SCNx32, &expected) != 1 ||
          expected != checksum(payload)) {
        break;
      }
      Value record = Value::parse(payload, nullptr, false);
      if (record.is_discarded()) break;
      for (const auto& op : record.at("ops")) {
        const std::string kind = op.at(0);
        if (kind == "put") m.put(op.at(1), op.at(2), op.at(3));
        else if (kind == "del") m.erase(op.at(1), op.at(2));
      }
      pos = nl + 1;
      good_bytes = pos;
    }
    if (good_bytes < contents.size()) fs::resize_file(wal_path, good_bytes);
  }
  state_ = std::make_shared<const State>(m.release());
  open_wal(false);
  wal_bytes_ = good_bytes;
}

void Store::open_wal(bool truncate) {
  if (wal_) std::fclose(wal_);
  wal_ = std::fopen((dir_ / "wal.log").c_str(), truncate ? "wb" : "ab");
  if (!wal_) fail(ErrorKind::io, "cannot open " + (dir_ / "wal.log").string());
}

Snapshot Store::snapshot() const {
  std::lock_guard lock(publish_mutex_);
  return Snapshot(state_);
}

void Store::put(std::string_view ns, std::string key, Value value) {
  WriteBatch b;
  b.put(ns, std::move(key), std::move(value));
  commit(b);
}

void Store::erase(std::string_view ns, std::string key) {
  WriteBatch b;
  b.erase(ns, std::move(key));
  commit(b);
}

std::uint64_t Store::append_event(std::string user, Value event) {
  WriteBatch b;
  b.append_event(std::move(user), std::move(event));
  return commit(b).event_seqs.at(0);
}

CommitResult Store::commit(const WriteBatch& batch) {
  std::lock_guard writer(writer_mutex_);
  CommitResult result;
  if (batch.empty()) return result;

  std::shared_ptr<const State> base;
  {
    std::lock_guard lock(publish_mutex_);
    base = state_;
  }
  Mutator m{*base};
  Value ops = Value::array();
  for (const auto& e : batch.ops_) {
    switch (e.op) {
      case WriteBatch::Op::put:
        m.put(e.ns, e.key, e.value);
        ops.push_back({"put", e.ns, e.key, e.value});
        break;
      case WriteBatch::Op::erase:
        m.erase(e.ns, e.key);
        ops.push_back({"del", e.ns, e.key});
        break;
      case WriteBatch::Op::event: {
        auto seq = m.next_seq(e.key);
        Value ev = e.value;
        ev["seq"] = seq;
        auto key = event_key(e.key, seq);
        m.put(e.ns, key, ev);
        ops.push_back({"put", e.ns, key, std::move(ev)});
        result.event_seqs.push_back(seq);
        break;
      }
    }
  }

  if (wal_) {
    std::string payload = Value{{"ops", std::move(ops)}}.dump();
    char crc[10];
    std::snprintf(crc, sizeof crc, "%08" PRIx32 " ", checksum(payload));
    std::string line = crc + payload + "\n";
    long before = std::ftell(wal_);
    bool ok = std::fwrite(line.data(), 1, line.size(), wal_) == line.size() &&
              std::fflush(wal_) == 0;
    if (ok && options_.fsync) ok = ::fsync(::fileno(wal_)) == 0;
    if (!ok) {
      // leave no partial record behind
      if (before >= 0) {
        std::error_code ec;
        fs::resize_file(dir_ / "wal.log", static_cast<std::uintmax_t>(before), ec);
      }
      open_wal(false);
      fail(ErrorKind::io, "write-ahead log append failed");
    }
    wal_bytes_ += line.size();
  }

  auto next = std::make_shared<const State>(m.release());
  {
    std::lock_guard lock(publish_mutex_);
    state_ = next;
  }
  if (wal_ && wal_bytes_ >= options_.compact_after_bytes) {
    write_snapshot_file(*next);
  }
  return result;
}

void Store::write_snapshot_file(const State& state) {
  auto number = snapshot_number_ + 1;
  char name[16];
  std::snprintf(name, sizeof name, "%04" PRIu64, number);
  auto final_path = dir_ / "snapshots" / name;
  auto tmp_path = dir_ / "snapshots" / (std::string(name) + ".tmp");
  {
    std::FILE* f = std::fopen(tmp_path.c_str(), "wb");
    if (!f) fail(ErrorKind::io, "cannot write " + tmp_path.string());
    std::string body = dump_state(state).dump();
    bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
    sync_file(f);
    std::fclose(f);
    if (!ok) fail(ErrorKind::io, "short write to " + tmp_path.string());
  }
  fs::rename(tmp_path, final_path);
  sync_directory(dir_ / "snapshots");
  snapshot_number_ = number;
  open_wal(true);
  wal_bytes_ = 0;

  std::vector<std::uint64_t> old;
  for (const auto& entry : fs::directory_iterator(dir_ / "snapshots")) {
    auto n = entry.path().filename().string();
    if (!n.empty() && std::all_of(n.begin(), n.end(), ::isdigit)) old.push_back(std::stoull(n));
  }
  std::sort(old.rbegin(), old.rend());
  for (std::size_t i = options_.keep_snapshots; i < old.size(); ++i) {
    std::snprintf(name, sizeof name, "%04" PRIu64, old[i]);
    std::error_code ec;
    fs::remove(dir_ / "snapshots" / name, ec);
  }
}

void Store::compact() {
  std::lock_guard writer(writer_mutex_);
  if (!wal_) return;
  std::shared_ptr<const State> current;
  {
    std::lock_guard lock(publish_mutex_);
    current = state_;
  }
  write_snapshot_file(*current);
}

void Store::load(const Value& dump) {
  std::lock_guard writer(writer_mutex_);
  auto next = std::make_shared<const State>(state_from_dump(dump));
  if (wal_) write_snapshot_file(*next);
  std::lock_guard lock(publish_mutex_);
  state_ = next;
}

}  // namespace emag::store
