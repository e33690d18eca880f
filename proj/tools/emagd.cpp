// emagd: HTTP/JSON server.
#include <atomic>
#include <condition_variable>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "emag/api.hpp"

using namespace emag;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main() {
  try {
    std::string bind = env_or("BIND_ADDR", "127.0.0.1:8080");
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "BIND_ADDR must be host:port\n";
      return 2;
    }
    std::string host = bind.substr(0, colon);
    int port = std::stoi(bind.substr(colon + 1));
    std::string config_path = env_or("CONFIG_PATH", "");
    int rebuild_secs = std::stoi(env_or("REBUILD_INTERVAL_SECS", "0"));

    auto store = store::Store::open(env_or("DATA_DIR", "data"));
    Engine engine(*store, config_path.empty() ? EngineConfig{} : EngineConfig::load(config_path));
    api::Service service(engine);

    httplib::Server server;
    service.mount(server);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    std::mutex m;
    std::condition_variable cv;
    bool stopping = false;
    std::thread rebuilder;
    if (rebuild_secs > 0) {
      rebuilder = std::thread([&] {
        std::unique_lock lock(m);
        while (!cv.wait_for(lock, std::chrono::seconds(rebuild_secs), [&] { return stopping; })) {
          try {
            auto v = engine.rebuild_recommender();
            std::cerr << "recommender rebuilt, version " << v << "\n";
          } catch (const std::exception& e) {
            std::cerr << "recommender rebuild skipped: " << e.what() << "\n";
          }
        }
      });
    }

    std::cerr << "emagd listening on " << host << ":" << port << "\n";
    bool ok = server.listen(host, port);
    {
      std::lock_guard lock(m);
      stopping = true;
    }
    cv.notify_all();
    if (rebuilder.joinable()) rebuilder.join();
    if (!ok) {
      std::cerr << "cannot listen on " << bind << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "emagd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
