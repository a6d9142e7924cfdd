#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "logichint/json_io.hpp"
#include "logichint/prompt.hpp"

namespace logichint {

enum class BackendKind : std::uint8_t { Replay, OpenAI, Gemini };

std::string_view backend_kind_name(BackendKind kind);
std::optional<BackendKind> backend_kind_from_name(std::string_view name);

struct RetryPolicy {
  /// Total attempts including the first; 1 disables retries.
  int max_attempts = 3;
  double backoff_ms = 500.0;
  double backoff_factor = 2.0;
};

struct BackendConfig {
  std::string id = "fixture";
  BackendKind kind = BackendKind::Replay;
  /// Base URL, e.g. "https://api.openai.com/v1".
  std::string endpoint;
  std::string model = "fixture-model";
  double temperature = 0.1;
  int max_tokens = 2048;
  double timeout_s = 60.0;
  RetryPolicy retry;
  /// Environment variable holding the API key; defaults to LOGICHINT_<ID>_KEY.
  std::string credential_env;
  /// Requests per second; 0 disables the limiter.
  double rate_per_second = 0.0;
  int burst = 1;
  int max_concurrency = 4;
  /// Replay backends read their completions from this file.
  std::string cassette;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  std::string credential_variable() const;

  /// Reads a config object. Key material is rejected: credentials come only
  /// from the environment.
  static BackendConfig from_json(const Json& j);
  Json to_json() const;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct CompletionError {
  enum class Kind : std::uint8_t { Miss, Timeout, Auth, RateLimit, Malformed, Network, Unavailable };
  Kind kind = Kind::Network;
  std::string message;
};

std::string_view completion_error_name(CompletionError::Kind kind);

struct Completion {
  std::string request_hash;
  std::optional<std::string> text;
  double latency_ms = 0.0;
  Usage usage;
  std::string backend_id;
  std::optional<CompletionError> error;
  int attempts = 0;

  bool ok() const { return text.has_value(); }
};

std::string sha256_hex(std::string_view data);

/// Digest of the canonical serialisation {"model","temperature","prompt"}.
std::string request_hash(std::string_view model, double temperature, std::string_view prompt);

class CassetteError : public std::runtime_error {
public:
  CassetteError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct CassetteEntry {
  std::string hash;
  std::string backend;
  std::string model;
  double temperature = 0.1;
  std::string prompt_sha256;
  std::size_t prompt_bytes = 0;
  std::string text;
};

/// Recorded completions keyed by request hash. NDJSON on disk, one entry per
/// line, written in hash order. Thread-safe.
class Cassette {
public:
  static Cassette load(const std::filesystem::path& path);
  static Cassette parse(std::istream& in, const std::string& origin = "cassette");
  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  void insert(CassetteEntry entry);
  std::optional<CassetteEntry> find(const std::string& hash) const;
  std::size_t size() const;
  std::vector<CassetteEntry> entries() const;

  Cassette() = default;
  Cassette(const Cassette& other);
  Cassette& operator=(const Cassette& other);

private:
  mutable std::mutex mutex_;
  std::map<std::string, CassetteEntry> entries_;
};

/// One provider. `send` performs a single attempt; retries, rate limiting
/// and concurrency caps live in Gateway.
class Backend {
public:
  explicit Backend(BackendConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~Backend() = default;
  const BackendConfig& config() const { return cfg_; }
  virtual Completion send(const std::string& prompt, const std::string& hash) = 0;

protected:
  BackendConfig cfg_;
};

class ReplayBackend : public Backend {
public:
  ReplayBackend(BackendConfig cfg, std::shared_ptr<const Cassette> cassette);
  Completion send(const std::string& prompt, const std::string& hash) override;

private:
  std::shared_ptr<const Cassette> cassette_;
};

/// Forwards to another backend and stores every successful completion.
class RecordingBackend : public Backend {
public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> sink);
  Completion send(const std::string& prompt, const std::string& hash) override;

private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<Cassette> sink_;
};

/// Chat-completions API (OpenAI and compatible hosts).
class OpenAiBackend : public Backend {
public:
  using Backend::Backend;
  Completion send(const std::string& prompt, const std::string& hash) override;
};

/// generateContent API.
class GeminiBackend : public Backend {
public:
  using Backend::Backend;
  Completion send(const std::string& prompt, const std::string& hash) override;
};

/// Replay backends load `cfg.cassette`; HTTP backends are created as-is.
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

class Gateway {
public:
  Gateway() = default;
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void add(std::unique_ptr<Backend> backend);
  bool has(const std::string& id) const;
  const BackendConfig& config(const std::string& id) const;
  std::vector<std::string> backend_ids() const;

  Completion complete(const PromptBundle& bundle, const std::string& backend_id);
  Completion complete_text(const std::string& prompt, const std::string& backend_id);

private:
  struct Slot {
    std::unique_ptr<Backend> backend;
    std::mutex mutex;
    std::condition_variable cv;
    int in_flight = 0;
    double tokens = 0.0;
    std::chrono::steady_clock::time_point refilled = std::chrono::steady_clock::now();
  };
  void acquire(Slot& slot);
  void release(Slot& slot);

  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

}  // namespace logichint
