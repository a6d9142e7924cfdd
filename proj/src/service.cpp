#include "logichint/service.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <random>

#include "logichint/search.hpp"

namespace logichint {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

double now_seconds() {
  using namespace std::chrono;
  return static_cast<double>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()) / 1000.0;
}

ServiceResponse error(int status, const std::string& message) { return {status, Json{{"error", message}}}; }

const std::set<std::string> kConfigKeys{"host",          "port",          "data_dir",     "problems_dir",
                                        "templates_dir", "examples",      "cors_origin",  "hint_backend",
                                        "hint_strategy", "backends"};

}  // namespace

ServiceConfig ServiceConfig::defaults(const std::filesystem::path& data_root) {
  ServiceConfig c;
  c.data_dir = data_root / "tutor-data";
  c.problems_dir = data_root / "data/problems";
  c.templates_dir = data_root / "templates";
  c.examples = data_root / "data/examples/bank.json";
  return c;
}

ServiceConfig ServiceConfig::from_json(const Json& j, const std::filesystem::path& base,
                                       const std::filesystem::path& data_root) {
  if (!j.is_object()) throw SchemaError("service config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kConfigKeys.count(k)) throw SchemaError("unknown service config key \"" + k + "\"");
  }
  ServiceConfig c = defaults(data_root);
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    c.hint_backend = j.value("hint_backend", c.hint_backend);
    if (j.contains("data_dir")) c.data_dir = resolve_path(base, j["data_dir"].get<std::string>());
    if (j.contains("problems_dir")) c.problems_dir = resolve_path(base, j["problems_dir"].get<std::string>());
    if (j.contains("templates_dir")) c.templates_dir = resolve_path(base, j["templates_dir"].get<std::string>());
    if (j.contains("examples")) c.examples = resolve_path(base, j["examples"].get<std::string>());
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("service config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw SchemaError("service config: port out of range");
  if (j.contains("hint_strategy")) {
    auto s = strategy_from_name(j["hint_strategy"].is_string() ? j["hint_strategy"].get<std::string>() : "");
    if (!s) throw SchemaError("service config: unknown hint_strategy");
    c.hint_strategy = *s;
  }
  if (auto it = j.find("backends"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("service config: backends must be an array");
    for (const auto& b : *it) {
      auto cfg = BackendConfig::from_json(b);
      if (!cfg.cassette.empty()) cfg.cassette = resolve_path(base, cfg.cassette).string();
      c.backends.push_back(std::move(cfg));
    }
  }
  if (!c.hint_backend.empty()) {
    bool found = false;
    for (const auto& b : c.backends) found = found || b.id == c.hint_backend;
    if (!found) throw SchemaError("service config: hint_backend \"" + c.hint_backend + "\" is not configured");
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path, const std::filesystem::path& data_root) {
  return from_json(read_json_file(path), path.parent_path(), data_root);
}

Json ServiceConfig::to_json() const {
  Json backends_json = Json::array();
  for (const auto& b : backends) backends_json.push_back(b.to_json());
  return Json{{"host", host},
              {"port", port},
              {"data_dir", data_dir.string()},
              {"problems_dir", problems_dir.string()},
              {"templates_dir", templates_dir.string()},
              {"examples", examples.string()},
              {"cors_origin", cors_origin},
              {"hint_backend", hint_backend},
              {"hint_strategy", strategy_name(hint_strategy)},
              {"backends", backends_json}};
}

struct TutorService::Session {
  std::string id;
  Problem problem;
  std::filesystem::path log;
  std::mutex mutex;
  std::vector<ProofStep> derived;
  std::size_t hint_count = 0;
  double created = 0.0;
  double updated = 0.0;
  /// Published after every mutation; readers take it without the mutex.
  std::shared_ptr<const Json> snapshot;

  Pss state() const { return Pss{problem, derived, derived.size(), std::nullopt}; }

  bool complete() const {
    for (const auto& s : derived) {
      if (s.formula == problem.conclusion) return true;
    }
    return false;
  }

  void publish() {
    Pss pss = state();
    Json steps = Json::array();
    for (const auto& s : derived) steps.push_back(step_to_json(s));
    auto j = std::make_shared<const Json>(Json{{"id", id},
                                               {"problem_id", problem.id},
                                               {"level", std::string(level_name(problem.level))},
                                               {"hints_allowed", level_allows_hints(problem.level)},
                                               {"problem", problem_to_json(problem)},
                                               {"derived", steps},
                                               {"rendered", render(pss)},
                                               {"complete", complete()},
                                               {"hint_count", hint_count},
                                               {"created", created},
                                               {"updated", updated}});
    std::atomic_store(&snapshot, j);
  }
};

TutorService::TutorService(ServiceConfig cfg, std::vector<Problem> problems, std::shared_ptr<const PromptForge> forge,
                           std::shared_ptr<Gateway> gateway)
    : cfg_(std::move(cfg)), problems_(std::move(problems)), forge_(std::move(forge)), gateway_(std::move(gateway)) {
  std::sort(problems_.begin(), problems_.end(), [](const Problem& a, const Problem& b) { return a.id < b.id; });
  std::filesystem::create_directories(cfg_.data_dir / "sessions");
}

TutorService::~TutorService() = default;

std::size_t TutorService::load_sessions() {
  std::size_t loaded = 0;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(cfg_.data_dir / "sessions")) {
    auto name = entry.path().filename().string();
    if (name.size() > 14 && name.substr(name.size() - 14) == ".events.ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    auto log = read_event_log(path);
    auto s = std::make_shared<Session>();
    s->id = path.filename().string().substr(0, path.filename().string().size() - 14);
    if (log.problem) {
      s->problem = *log.problem;
    } else if (const Problem* p = find_problem(problems_, log.problem_id)) {
      s->problem = *p;
    } else {
      throw std::runtime_error(path.string() + ": unknown problem \"" + log.problem_id + "\"");
    }
    s->log = path;
    s->derived = replay(log, s->problem);
    for (const auto& e : log.events) {
      if (e.kind == LogEvent::Kind::HintRequest) ++s->hint_count;
    }
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    s->created = Json::parse(first).value("t", 0.0);
    s->updated = log.events.empty() ? s->created : log.events.back().t;
    s->publish();
    std::unique_lock lock(sessions_mutex_);
    sessions_[s->id] = s;
    ++loaded;
  }
  return loaded;
}

std::shared_ptr<TutorService::Session> TutorService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string TutorService::new_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  char buf[40];
  std::snprintf(buf, sizeof buf, "s%012llx%04llx", static_cast<unsigned long long>(rng() & 0xffffffffffffULL),
                static_cast<unsigned long long>(++counter_ & 0xffff));
  return buf;
}

void TutorService::append(Session& s, const Json& event) {
  std::ofstream out(s.log, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + s.log.string());
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + s.log.string());
}

ServiceResponse TutorService::list_problems() const {
  Json arr = Json::array();
  for (const auto& p : problems_) {
    Json j = problem_to_json(p);
    j.erase("schema");
    j["hints_allowed"] = level_allows_hints(p.level);
    arr.push_back(std::move(j));
  }
  return {200, Json{{"problems", arr}}};
}

ServiceResponse TutorService::create_session(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error&) {
    return error(400, "request body is not JSON");
  }
  if (!j.is_object() || !j.contains("problem_id") || !j["problem_id"].is_string()) {
    return error(400, "expected {\"problem_id\": \"...\"}");
  }
  const Problem* p = find_problem(problems_, j["problem_id"].get<std::string>());
  if (!p) return error(404, "unknown problem \"" + j["problem_id"].get<std::string>() + "\"");
  auto s = std::make_shared<Session>();
  s->problem = *p;
  do {
    s->id = new_id();
    s->log = cfg_.data_dir / "sessions" / (s->id + ".events.ndjson");
  } while (find(s->id) || std::filesystem::exists(s->log));
  s->created = s->updated = now_seconds();
  append(*s, start_event_json(s->problem, s->created, true));
  s->publish();
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[s->id] = s;
  }
  return {201, *std::atomic_load(&s->snapshot)};
}

ServiceResponse TutorService::get_session(const std::string& id) const {
  auto s = find(id);
  if (!s) return error(404, "unknown session \"" + id + "\"");
  return {200, *std::atomic_load(&s->snapshot)};
}

ServiceResponse TutorService::post_step(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return error(404, "unknown session \"" + id + "\"");
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error&) {
    return error(400, "request body is not JSON");
  }
  if (!j.is_object()) return error(400, "expected a step object");
  std::lock_guard guard(s->mutex);
  ProofStep step;
  try {
    step = step_from_json(j, s->derived.size() + 1);
  } catch (const ParseError& e) {
    return {422, Json{{"error", "malformed formula"}, {"detail", e.what()}, {"offset", e.offset()}}};
  } catch (const SchemaError& e) {
    return {422, Json{{"error", "malformed step"}, {"detail", e.what()}}};
  }
  auto verdict = check_step(s->state(), step);
  Json v{{"valid", verdict.valid()}, {"code", std::string(step_verdict_name(verdict.code))}};
  if (!verdict.valid()) v["reason"] = verdict.reason;
  if (verdict.valid()) {
    LogEvent e;
    e.kind = LogEvent::Kind::Derive;
    e.step = step;
    e.t = std::max(s->updated, now_seconds());
    append(*s, event_to_json(e));
    s->derived.push_back(step);
    s->updated = e.t;
    s->publish();
  }
  auto snap = std::atomic_load(&s->snapshot);
  return {200, Json{{"verdict", v}, {"complete", (*snap)["complete"]}, {"session", *snap}}};
}

ServiceResponse TutorService::get_hint(const std::string& id, const std::string& source) {
  auto s = find(id);
  if (!s) return error(404, "unknown session \"" + id + "\"");
  if (source != "search" && source != "llm") return error(400, "source must be \"search\" or \"llm\"");
  if (!level_allows_hints(s->problem.level)) {
    return error(403, "hints are not available for " + std::string(level_name(s->problem.level)) + " problems");
  }
  std::lock_guard guard(s->mutex);
  Pss pss = s->state();
  std::optional<Hint> hint;
  if (source == "search") {
    hint = next_step_hint(pss);
    if (!hint) {
      return {200, Json{{"source", source}, {"hint", nullptr}, {"status", "no hint available"},
                        {"hint_count", s->hint_count}}};
    }
  } else {
    if (cfg_.hint_backend.empty() || !gateway_ || !forge_ || !gateway_->has(cfg_.hint_backend)) {
      return error(503, "no LLM backend configured");
    }
    auto bundle = forge_->build_hint_prompt(render_text(pss), cfg_.hint_strategy);
    auto completion = gateway_->complete(bundle, cfg_.hint_backend);
    if (!completion.ok()) {
      int status = completion.error->kind == CompletionError::Kind::Malformed ? 502 : 503;
      return {status, Json{{"error", "backend unavailable"},
                           {"kind", std::string(completion_error_name(completion.error->kind))},
                           {"detail", completion.error->message}}};
    }
    auto parsed = parse_hint_response(*completion.text);
    if (!parsed.parse_ok || !parsed.hint) {
      return {502, Json{{"error", "unparseable hint response"}, {"detail", parsed.error}}};
    }
    hint = parsed.hint;
  }
  auto verdict = validate_hint(pss, *hint);
  Json v{{"correct", verdict.correct()}};
  if (!verdict.correct()) {
    v["reason"] = std::string(hint_reason_name(verdict.reason));
    v["detail"] = verdict.detail;
  }
  LogEvent e;
  e.kind = LogEvent::Kind::HintRequest;
  e.t = std::max(s->updated, now_seconds());
  e.extra = Json{{"source", source}, {"hint", hint_to_json(*hint)}, {"verdict", v}};
  append(*s, event_to_json(e));
  ++s->hint_count;
  s->updated = e.t;
  s->publish();
  return {200, Json{{"source", source}, {"hint", hint_to_json(*hint)}, {"verdict", v}, {"hint_count", s->hint_count}}};
}

void TutorService::mount(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/problems", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, list_problems()); });
  server.Post("/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, create_session(req.body));
  });
  server.Get(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/steps)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_step(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/hint)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::string source = req.has_param("source") ? req.get_param_value("source") : "search";
    reply(res, get_hint(req.matches[1], source));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(Json{{"error", what}}.dump(), "application/json");
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(Json{{"error", httplib::status_message(res.status)}}.dump(), "application/json");
  });
}

TutorServer::TutorServer(const ServiceConfig& cfg) : server_(std::make_unique<httplib::Server>()), cfg_(cfg) {
  auto problems = load_problem_dir(cfg.problems_dir);
  std::shared_ptr<const PromptForge> forge;
  if (std::filesystem::is_directory(cfg.templates_dir) && std::filesystem::exists(cfg.examples)) {
    forge = std::make_shared<PromptForge>(TemplateSet::load(cfg.templates_dir), ExampleBank::load(cfg.examples));
  }
  auto gateway = std::make_shared<Gateway>();
  for (const auto& b : cfg.backends) gateway->add(make_backend(b));
  service_ = std::make_unique<TutorService>(cfg, std::move(problems), std::move(forge), std::move(gateway));
  service_->load_sessions();
  service_->mount(*server_);
}

TutorServer::~TutorServer() = default;

bool TutorServer::listen() { return server_->listen(cfg_.host, cfg_.port); }

int TutorServer::bind_any() { return server_->bind_to_any_port(cfg_.host); }

bool TutorServer::listen_after_bind() { return server_->listen_after_bind(); }

void TutorServer::stop() { server_->stop(); }

void TutorServer::wait_until_ready() { server_->wait_until_ready(); }

}  // namespace logichint
