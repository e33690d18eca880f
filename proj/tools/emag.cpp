// emag: operator CLI for the e-magazine store.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "emag/engine.hpp"
#include "emag/error.hpp"

using nlohmann::json;
using namespace emag;

namespace {

struct Options {
  bool as_json = false;
  std::string server;
  std::string token;
  std::string data_dir;
  std::string config_path;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::invalid_argument, path + " is not valid JSON");
  return j;
}

Clock clock_from_env() {
  if (const char* fixed = std::getenv("EMAG_NOW"); fixed && *fixed) {
    auto t = parse_iso8601(fixed);
    if (!t) fail(ErrorKind::invalid_argument, "EMAG_NOW is not an ISO-8601 timestamp");
    return [t = *t] { return t; };
  }
  return system_clock();
}

class Local {
 public:
  explicit Local(const Options& o)
      : store_(store::Store::open(o.data_dir)),
        engine_(*store_,
                o.config_path.empty() ? EngineConfig{} : EngineConfig::load(o.config_path),
                clock_from_env()) {}
  Engine& engine() { return engine_; }
  store::Store& store() { return *store_; }

 private:
  std::unique_ptr<store::Store> store_;
  Engine engine_;
};

json remote_call(const Options& o, const std::string& method, const std::string& path,
                 const std::optional<json>& body = std::nullopt) {
  httplib::Client client(o.server);
  client.set_connection_timeout(10);
  httplib::Headers headers;
  if (!o.token.empty()) headers.emplace("Authorization", "Bearer " + o.token);
  httplib::Result res = method == "GET"
                            ? client.Get(path, headers)
                            : client.Post(path, headers, body ? body->dump() : "{}",
                                          "application/json");
  if (!res) fail(ErrorKind::io, "no response from " + o.server + ": " + httplib::to_string(res.error()));
  json j = json::parse(res->body, nullptr, false);
  if (res->status >= 300) {
    std::string msg = j.is_object() ? j.value("message", res->body) : res->body;
    fail(res->status == 404 ? ErrorKind::not_found : ErrorKind::io,
         "server answered " + std::to_string(res->status) + ": " + msg);
  }
  return j;
}

void emit(const Options& o, const json& j, const std::string& text) {
  if (o.as_json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::string report_line(const IngestReport& r) {
  std::ostringstream s;
  s << r.source_id << ": fetched " << r.fetched << ", new " << r.added << ", duplicates "
    << r.duplicates << ", skipped " << r.skipped;
  for (const auto& e : r.errors) s << "\n  error: " << e;
  s << "\n";
  return s.str();
}

std::string user_text(const json& u) {
  std::ostringstream s;
  s << u.at("user_id").get<std::string>() << " <" << u.at("email").get<std::string>() << ">\n"
    << "  events: " << u.at("event_count") << ", progress: " << u.at("progress") << "%\n";
  if (u.contains("interests"))
    for (const auto& e : u.at("interests"))
      s << "  " << e.at("keyword").get<std::string>() << " " << e.at("weight").get<double>() << " ("
        << e.at("tier").get<std::string>() << ")\n";
  return s.str();
}

json local_user_json(Engine& engine, const std::string& id) {
  UserProfile u = engine.user(id);
  json interests = json::array();
  for (const auto& kw : ranked_keywords(u))
    interests.push_back(entry_to_json(u.interests.at(kw), engine.config().interest));
  return {{"user_id", u.user_id},
          {"email", u.email},
          {"list_visibility", to_string(u.list_visibility)},
          {"event_count", u.event_count},
          {"progress", progress_percent(u.event_count, engine.config().interest)},
          {"interests", interests}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emag: manage sources, ingestion, users and recommendations"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  o.data_dir = env_or("DATA_DIR", "data");
  o.config_path = env_or("CONFIG_PATH", "");
  o.token = env_or("EMAG_TOKEN", "");
  app.add_flag("--json", o.as_json, "Machine-readable output");
  app.add_option("--server", o.server, "Talk to a running emagd at this base URL");
  app.add_option("--token", o.token, "Bearer token for --server (default: $EMAG_TOKEN)");
  app.add_option("--data-dir", o.data_dir, "Store directory (default: $DATA_DIR or ./data)");
  app.add_option("--config", o.config_path, "Engine config JSON (default: $CONFIG_PATH)");

  auto* source = app.add_subcommand("source", "Manage feed sources");
  source->require_subcommand(1);
  auto* source_add = source->add_subcommand("add", "Register a feed source");
  std::string src_id, src_url, src_category, src_file;
  source_add->add_option("--id", src_id, "Source id");
  source_add->add_option("--url", src_url, "RSS feed URL");
  source_add->add_option("--category", src_category, "Taxonomy path, e.g. sports/cricket");
  source_add->add_option("--file", src_file, "JSON file with a source object or an array of them");
  auto* source_list = source->add_subcommand("list", "List sources");
  auto* source_disable = source->add_subcommand("disable", "Disable a source");
  source_disable->add_option("id", src_id)->required();
  auto* source_enable = source->add_subcommand("enable", "Re-enable a source");
  source_enable->add_option("id", src_id)->required();

  auto* ingest = app.add_subcommand("ingest", "Fetch sources and store new items");
  std::string ingest_source;
  bool ingest_all = false;
  auto* ingest_opt = ingest->add_option("--source", ingest_source, "Single source id");
  ingest->add_flag("--all", ingest_all, "Every enabled source")->excludes(ingest_opt);

  auto* maintain = app.add_subcommand("maintain", "Maintenance jobs");
  maintain->require_subcommand(1);
  auto* decay_flush = maintain->add_subcommand("decay-flush", "Decay interests and flush stale Low entries");

  auto* recommend = app.add_subcommand("recommend", "Recommender");
  recommend->require_subcommand(1);
  auto* rebuild = recommend->add_subcommand("rebuild", "Recompute the latent space");
  std::size_t rank = 0;
  rebuild->add_option("-k,--rank", rank, "Truncation rank (default: min(users, keywords, max_rank))");
  auto* show = recommend->add_subcommand("show", "Show recommendations for a user");
  std::string user_id;
  show->add_option("user", user_id)->required();

  auto* profile = app.add_subcommand("profile", "Profile documents");
  profile->require_subcommand(1);
  auto* profile_import = profile->add_subcommand("import", "Import a profile document");
  std::string profile_file;
  profile_import->add_option("file", profile_file)->required()->check(CLI::ExistingFile);

  auto* user = app.add_subcommand("user", "Users");
  user->require_subcommand(1);
  auto* user_add = user->add_subcommand("add", "Register a user");
  std::string email;
  user_add->add_option("email", email)->required();
  auto* user_show = user->add_subcommand("show", "Show a user and their interests");
  user_show->add_option("user", user_id)->required();

  std::string dump_file;
  auto* dump = app.add_subcommand("dump", "Write the whole store as JSON");
  dump->add_option("file", dump_file)->required();
  auto* load = app.add_subcommand("load", "Replace the store with a JSON dump");
  load->add_option("file", dump_file)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (ingest->parsed() && ingest_source.empty() && !ingest_all) {
    std::cerr << "ingest: pass --source ID or --all\n";
    return 2;
  }
  if (source_add->parsed() && src_file.empty() &&
      (src_id.empty() || src_url.empty() || src_category.empty())) {
    std::cerr << "source add: pass --id, --url and --category, or --file\n";
    return 2;
  }

  try {
    if (!o.server.empty()) {
      if (profile_import->parsed()) {
        json doc = read_json_file(profile_file);
        auto id = doc.value("user_id", "");
        json r = remote_call(o, "POST", "/users/" + id + "/profile-import", doc);
        emit(o, r, "imported " + std::to_string(r.at("imported").size()) + " interests\n");
      } else if (user_show->parsed()) {
        json u = remote_call(o, "GET", "/users/" + user_id);
        u["interests"] = remote_call(o, "GET", "/users/" + user_id + "/interests").at("interests");
        emit(o, u, user_text(u));
      } else {
        std::cerr << "--server supports only 'profile import' and 'user show'\n";
        return 2;
      }
      return 0;
    }

    Local local(o);
    Engine& engine = local.engine();

    if (source_add->parsed()) {
      std::vector<FeedSource> add;
      if (!src_file.empty()) {
        json j = read_json_file(src_file);
        if (j.is_array())
          for (const auto& s : j) add.push_back(s.get<FeedSource>());
        else
          add.push_back(j.get<FeedSource>());
      } else {
        add.push_back({src_id, src_url, src_category, std::nullopt, true});
      }
      json out = json::array();
      std::string text;
      for (auto& s : add) {
        engine.add_source(s);
        out.push_back(s);
        text += "added " + s.id + "\n";
      }
      emit(o, out, text);
    } else if (source_list->parsed()) {
      json out = json::array();
      std::string text;
      for (const auto& s : engine.sources()) {
        out.push_back(s);
        text += s.id + "\t" + s.category + "\t" + s.url + (s.enabled ? "" : "\t(disabled)") + "\n";
      }
      emit(o, out, text);
    } else if (source_disable->parsed() || source_enable->parsed()) {
      bool enabled = source_enable->parsed();
      engine.set_source_enabled(src_id, enabled);
      emit(o, {{"id", src_id}, {"enabled", enabled}},
           src_id + (enabled ? " enabled\n" : " disabled\n"));
    } else if (ingest->parsed()) {
      std::vector<IngestReport> reports =
          ingest_all ? engine.ingest_all() : std::vector{engine.ingest(ingest_source)};
      json out = json::array();
      std::string text;
      bool failed = false;
      for (const auto& r : reports) {
        out.push_back(r);
        text += report_line(r);
        failed = failed || !r.errors.empty();
      }
      emit(o, out, text);
      return failed ? 1 : 0;
    } else if (decay_flush->parsed()) {
      json out = json::object();
      std::size_t decayed = 0, flushed = 0;
      for (const auto& [id, r] : engine.decay_and_flush_all()) {
        out[id] = {{"decayed", r.decayed}, {"flushed", r.flushed}};
        decayed += r.decayed.size();
        flushed += r.flushed.size();
      }
      emit(o, out, std::to_string(out.size()) + " users, " + std::to_string(decayed) +
                       " interests decayed, " + std::to_string(flushed) + " flushed\n");
    } else if (rebuild->parsed()) {
      auto version = engine.rebuild_recommender(rank);
      auto space = engine.latent_space();
      emit(o, {{"version", version}, {"k", space->decomposition.rank()}},
           "latent space version " + std::to_string(version) + " (k=" +
               std::to_string(space->decomposition.rank()) + ")\n");
    } else if (show->parsed()) {
      if (!engine.latent_space()) {
        std::cerr << "rebuild required: run 'emag recommend rebuild' first\n";
        return 1;
      }
      json out = json::array();
      std::string text;
      for (const auto& r : engine.recommendations(user_id)) {
        out.push_back(r);
        std::ostringstream line;
        line << r.keyword << "\t" << r.score << "\t" << to_string(r.reason);
        if (r.contributing_user) line << "\t" << *r.contributing_user;
        text += line.str() + "\n";
      }
      emit(o, out, text.empty() ? "no recommendations\n" : text);
    } else if (profile_import->parsed()) {
      auto doc = profile_document_from_json(read_json_file(profile_file));
      auto entries = engine.import_profile(doc);
      json out = json::array();
      std::string text;
      for (const auto& e : entries) {
        out.push_back(entry_to_json(e, engine.config().interest));
        text += e.keyword + "\t" + std::to_string(e.weight) + "\n";
      }
      emit(o, out, text.empty() ? "no interests matched\n" : text);
    } else if (user_add->parsed()) {
      auto u = engine.register_user(email);
      emit(o, {{"user_id", u.user_id}, {"email", u.email}}, u.user_id + "\n");
    } else if (user_show->parsed()) {
      json u = local_user_json(engine, user_id);
      emit(o, u, user_text(u));
    } else if (dump->parsed()) {
      std::ofstream out(dump_file);
      if (!out) fail(ErrorKind::io, "cannot write " + dump_file);
      out << local.store().snapshot().dump().dump(2) << "\n";
      if (!out) fail(ErrorKind::io, "write to " + dump_file + " failed");
      emit(o, {{"file", dump_file}}, "wrote " + dump_file + "\n");
    } else if (load->parsed()) {
      local.store().load(read_json_file(dump_file));
      emit(o, {{"file", dump_file}}, "loaded " + dump_file + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
