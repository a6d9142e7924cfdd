#include "logichint/gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

namespace logichint {

std::string_view backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::Replay: return "replay";
    case BackendKind::OpenAI: return "openai";
    case BackendKind::Gemini: return "gemini";
  }
  return "?";
}

std::optional<BackendKind> backend_kind_from_name(std::string_view name) {
  for (BackendKind k : {BackendKind::Replay, BackendKind::OpenAI, BackendKind::Gemini}) {
    if (backend_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view completion_error_name(CompletionError::Kind kind) {
  switch (kind) {
    case CompletionError::Kind::Miss: return "miss";
    case CompletionError::Kind::Timeout: return "timeout";
    case CompletionError::Kind::Auth: return "auth";
    case CompletionError::Kind::RateLimit: return "rate_limit";
    case CompletionError::Kind::Malformed: return "malformed_response";
    case CompletionError::Kind::Network: return "network";
    case CompletionError::Kind::Unavailable: return "unavailable";
  }
  return "?";
}

void BackendConfig::validate() const {
  if (id.empty()) throw std::invalid_argument("backend id must not be empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw std::invalid_argument("backend " + id + ": temperature must be within [0, 2]");
  }
  if (retry.max_attempts < 1) throw std::invalid_argument("backend " + id + ": retries must be >= 0");
  if (retry.backoff_ms < 0 || retry.backoff_factor < 1.0) {
    throw std::invalid_argument("backend " + id + ": backoff must be non-negative and non-shrinking");
  }
  if (max_tokens <= 0) throw std::invalid_argument("backend " + id + ": max_tokens must be positive");
  if (timeout_s <= 0) throw std::invalid_argument("backend " + id + ": timeout must be positive");
  if (rate_per_second < 0 || burst < 1) throw std::invalid_argument("backend " + id + ": bad rate limit");
  if (max_concurrency < 1) throw std::invalid_argument("backend " + id + ": max_concurrency must be >= 1");
  if (kind != BackendKind::Replay && endpoint.empty()) {
    throw std::invalid_argument("backend " + id + ": endpoint required");
  }
}

std::string BackendConfig::credential_variable() const {
  if (!credential_env.empty()) return credential_env;
  std::string out = "LOGICHINT_";
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_');
  return out + "_KEY";
}

BackendConfig BackendConfig::from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("backend config must be an object");
  for (const char* forbidden : {"key", "api_key", "apikey", "token", "secret"}) {
    if (j.contains(forbidden)) {
      throw SchemaError(std::string("backend config must not contain \"") + forbidden +
                        "\"; put credentials in the environment");
    }
  }
  BackendConfig c;
  c.id = j.value("id", c.id);
  if (j.contains("kind")) {
    auto k = backend_kind_from_name(j["kind"].get<std::string>());
    if (!k) throw SchemaError("unknown backend kind " + j["kind"].dump());
    c.kind = *k;
  }
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  if (j.contains("retry")) {
    const Json& r = j["retry"];
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_ms = r.value("backoff_ms", c.retry.backoff_ms);
    c.retry.backoff_factor = r.value("backoff_factor", c.retry.backoff_factor);
  }
  c.credential_env = j.value("credential_env", c.credential_env);
  c.rate_per_second = j.value("rate_per_second", c.rate_per_second);
  c.burst = j.value("burst", c.burst);
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.cassette = j.value("cassette", c.cassette);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return c;
}

Json BackendConfig::to_json() const {
  Json j{{"id", id},
         {"kind", std::string(backend_kind_name(kind))},
         {"endpoint", endpoint},
         {"model", model},
         {"temperature", temperature},
         {"max_tokens", max_tokens},
         {"timeout_s", timeout_s},
         {"retry", {{"max_attempts", retry.max_attempts}, {"backoff_ms", retry.backoff_ms}, {"backoff_factor", retry.backoff_factor}}},
         {"credential_env", credential_variable()},
         {"rate_per_second", rate_per_second},
         {"burst", burst},
         {"max_concurrency", max_concurrency}};
  if (!cassette.empty()) j["cassette"] = cassette;
  return j;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string request_hash(std::string_view model, double temperature, std::string_view prompt) {
  Json canonical{{"model", model}, {"temperature", temperature}, {"prompt", prompt}};
  return sha256_hex(canonical.dump());
}

Cassette::Cassette(const Cassette& other) {
  std::lock_guard lock(other.mutex_);
  entries_ = other.entries_;
}

Cassette& Cassette::operator=(const Cassette& other) {
  if (this == &other) return *this;
  std::map<std::string, CassetteEntry> copy;
  {
    std::lock_guard lock(other.mutex_);
    copy = other.entries_;
  }
  std::lock_guard lock(mutex_);
  entries_ = std::move(copy);
  return *this;
}

Cassette Cassette::parse(std::istream& in, const std::string& origin) {
  Cassette c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = origin + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw CassetteError(where + ": corrupt cassette line (not JSON)", line_no);
    }
    if (!j.is_object() || !j.contains("hash") || !j["hash"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw CassetteError(where + ": corrupt cassette line (needs string \"hash\" and \"text\")", line_no);
    }
    CassetteEntry e;
    e.hash = j["hash"].get<std::string>();
    e.text = j["text"].get<std::string>();
    e.backend = j.value("backend", "");
    e.model = j.value("model", "");
    e.temperature = j.value("temperature", 0.1);
    e.prompt_sha256 = j.value("prompt_sha256", "");
    e.prompt_bytes = j.value("prompt_bytes", std::size_t{0});
    c.entries_[e.hash] = std::move(e);
  }
  return c;
}

Cassette Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CassetteError("cannot open cassette " + path.string(), 0);
  return parse(in, path.string());
}

void Cassette::write(std::ostream& out) const {
  for (const auto& e : entries()) {
    Json j{{"hash", e.hash},
           {"backend", e.backend},
           {"model", e.model},
           {"temperature", e.temperature},
           {"prompt_sha256", e.prompt_sha256},
           {"prompt_bytes", e.prompt_bytes},
           {"text", e.text}};
    out << j.dump() << '\n';
  }
}

void Cassette::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cassette " + path.string());
  write(out);
}

void Cassette::insert(CassetteEntry entry) {
  std::lock_guard lock(mutex_);
  entries_[entry.hash] = std::move(entry);
}

std::optional<CassetteEntry> Cassette::find(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<CassetteEntry> out;
  for (const auto& [k, v] : entries_) out.push_back(v);
  return out;
}

ReplayBackend::ReplayBackend(BackendConfig cfg, std::shared_ptr<const Cassette> cassette)
    : Backend(std::move(cfg)), cassette_(std::move(cassette)) {}

Completion ReplayBackend::send(const std::string&, const std::string& hash) {
  Completion c;
  c.request_hash = hash;
  c.backend_id = cfg_.id;
  if (auto e = cassette_->find(hash)) {
    c.text = e->text;
  } else {
    c.error = CompletionError{CompletionError::Kind::Miss, "cassette has no completion for request " + hash};
  }
  return c;
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> sink)
    : Backend(inner->config()), inner_(std::move(inner)), sink_(std::move(sink)) {}

Completion RecordingBackend::send(const std::string& prompt, const std::string& hash) {
  Completion c = inner_->send(prompt, hash);
  if (c.ok()) {
    sink_->insert({hash, cfg_.id, cfg_.model, cfg_.temperature, sha256_hex(prompt), prompt.size(), *c.text});
  }
  return c;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case BackendKind::Replay: {
      auto cassette = std::make_shared<Cassette>();
      if (!cfg.cassette.empty()) *cassette = Cassette::load(cfg.cassette);
      return std::make_unique<ReplayBackend>(cfg, std::move(cassette));
    }
    case BackendKind::OpenAI: return std::make_unique<OpenAiBackend>(cfg);
    case BackendKind::Gemini: return std::make_unique<GeminiBackend>(cfg);
  }
  throw std::invalid_argument("unknown backend kind");
}

void Gateway::add(std::unique_ptr<Backend> backend) {
  backend->config().validate();
  auto slot = std::make_unique<Slot>();
  slot->tokens = backend->config().burst;
  std::string id = backend->config().id;
  slot->backend = std::move(backend);
  slots_[id] = std::move(slot);
}

bool Gateway::has(const std::string& id) const { return slots_.count(id) > 0; }

const BackendConfig& Gateway::config(const std::string& id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw std::out_of_range("unknown backend " + id);
  return it->second->backend->config();
}

std::vector<std::string> Gateway::backend_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : slots_) out.push_back(id);
  return out;
}

void Gateway::acquire(Slot& slot) {
  const BackendConfig& cfg = slot.backend->config();
  std::unique_lock lock(slot.mutex);
  slot.cv.wait(lock, [&] { return slot.in_flight < cfg.max_concurrency; });
  ++slot.in_flight;
  if (cfg.rate_per_second <= 0) return;
  while (true) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - slot.refilled).count();
    slot.tokens = std::min<double>(cfg.burst, slot.tokens + elapsed * cfg.rate_per_second);
    slot.refilled = now;
    if (slot.tokens >= 1.0) {
      slot.tokens -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - slot.tokens) / cfg.rate_per_second);
    slot.cv.wait_for(lock, wait);
  }
}

void Gateway::release(Slot& slot) {
  {
    std::lock_guard lock(slot.mutex);
    --slot.in_flight;
  }
  slot.cv.notify_all();
}

Completion Gateway::complete(const PromptBundle& bundle, const std::string& backend_id) {
  return complete_text(bundle.text(), backend_id);
}

Completion Gateway::complete_text(const std::string& prompt, const std::string& backend_id) {
  auto it = slots_.find(backend_id);
  if (it == slots_.end()) {
    Completion c;
    c.backend_id = backend_id;
    c.error = CompletionError{CompletionError::Kind::Unavailable, "no backend named " + backend_id};
    return c;
  }
  Slot& slot = *it->second;
  const BackendConfig& cfg = slot.backend->config();
  const std::string hash = request_hash(cfg.model, cfg.temperature, prompt);
  double backoff = cfg.retry.backoff_ms;
  Completion result;
  for (int attempt = 1; attempt <= cfg.retry.max_attempts; ++attempt) {
    acquire(slot);
    auto start = std::chrono::steady_clock::now();
    try {
      result = slot.backend->send(prompt, hash);
    } catch (const std::exception& e) {
      result = Completion{};
      result.error = CompletionError{CompletionError::Kind::Network, e.what()};
    }
    release(slot);
    if (cfg.kind != BackendKind::Replay) {
      result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.request_hash = hash;
    result.backend_id = cfg.id;
    result.attempts = attempt;
    if (result.ok()) return result;
    auto kind = result.error->kind;
    bool transient = kind == CompletionError::Kind::Timeout || kind == CompletionError::Kind::RateLimit ||
                     kind == CompletionError::Kind::Network;
    if (!transient || attempt == cfg.retry.max_attempts) break;
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
    backoff *= cfg.retry.backoff_factor;
  }
  return result;
}

}  // namespace logichint
