#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "logichint/gateway.hpp"
#include "logichint/json_io.hpp"
#include "logichint/prompt.hpp"
#include "logichint/pss.hpp"

namespace httplib {
class Server;
}

namespace logichint {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Session event logs live in `<data_dir>/sessions`.
  std::filesystem::path data_dir = "tutor-data";
  std::filesystem::path problems_dir;
  std::filesystem::path templates_dir;
  std::filesystem::path examples;
  std::string cors_origin = "*";
  /// Backend used for source=llm; empty disables LLM hints.
  std::string hint_backend;
  Strategy hint_strategy = Strategy::FS_CoT;
  std::vector<BackendConfig> backends;

  /// Relative paths are resolved against `base`. Missing path settings
  /// default to the bundled data under `data_root`.
  static ServiceConfig from_json(const Json& j, const std::filesystem::path& base,
                                 const std::filesystem::path& data_root);
  static ServiceConfig load(const std::filesystem::path& path, const std::filesystem::path& data_root);
  /// Defaults pointing at the bundled data under `data_root`.
  static ServiceConfig defaults(const std::filesystem::path& data_root);
  Json to_json() const;
};

struct ServiceResponse {
  int status = 200;
  Json body;
};

/// Session store and request handlers. Handlers are plain functions over JSON
/// so they can be exercised without a socket; `mount` wires them to routes.
class TutorService {
public:
  TutorService(ServiceConfig cfg, std::vector<Problem> problems, std::shared_ptr<const PromptForge> forge,
               std::shared_ptr<Gateway> gateway);
  ~TutorService();

  /// Replays every persisted session log. Returns the number loaded.
  std::size_t load_sessions();

  ServiceResponse list_problems() const;
  ServiceResponse create_session(const std::string& body);
  ServiceResponse get_session(const std::string& id) const;
  ServiceResponse post_step(const std::string& id, const std::string& body);
  ServiceResponse get_hint(const std::string& id, const std::string& source);

  void mount(httplib::Server& server);
  const ServiceConfig& config() const { return cfg_; }

private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string new_id();
  void append(Session& s, const Json& event);

  ServiceConfig cfg_;
  std::vector<Problem> problems_;
  std::shared_ptr<const PromptForge> forge_;
  std::shared_ptr<Gateway> gateway_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

/// Builds the service from a config (loading problems, templates and
/// backends) and serves until `stop` is called on the returned server.
class TutorServer {
public:
  explicit TutorServer(const ServiceConfig& cfg);
  ~TutorServer();
  /// Binds and serves on the calling thread; port 0 picks a free port.
  bool listen();
  /// Binds to a free port without serving yet; returns the port.
  int bind_any();
  bool listen_after_bind();
  void stop();
  void wait_until_ready();
  TutorService& service() { return *service_; }

private:
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<TutorService> service_;
  ServiceConfig cfg_;
};

}  // namespace logichint
