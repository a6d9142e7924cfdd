#include <httplib.h>

#include <cstdlib>

#include "logichint/gateway.hpp"

namespace logichint {

namespace {

struct Url {
  std::string origin;
  std::string base_path;
};

Url split_url(const std::string& endpoint) {
  auto scheme = endpoint.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = endpoint.find('/', host_start);
  Url u;
  u.origin = endpoint.substr(0, slash);
  u.base_path = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!u.base_path.empty() && u.base_path.back() == '/') u.base_path.pop_back();
  return u;
}

Completion failure(CompletionError::Kind kind, std::string message) {
  Completion c;
  c.error = CompletionError{kind, std::move(message)};
  return c;
}

std::optional<std::string> credential(const BackendConfig& cfg) {
  const char* v = std::getenv(cfg.credential_variable().c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

/// Shared POST + status classification. Returns the parsed body on 200.
std::variant<Json, Completion> post_json(const BackendConfig& cfg, const std::string& path, const Json& body,
                                         const httplib::Headers& headers) {
  Url url = split_url(cfg.endpoint);
  httplib::Client client(url.origin);
  auto secs = static_cast<time_t>(cfg.timeout_s);
  auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  auto res = client.Post(url.base_path + path, headers, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
      return failure(CompletionError::Kind::Timeout, "request timed out (" + httplib::to_string(err) + ")");
    }
    return failure(CompletionError::Kind::Network, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    return failure(CompletionError::Kind::Auth, "authentication rejected (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status == 429) return failure(CompletionError::Kind::RateLimit, "rate limited (HTTP 429)");
  if (res->status == 408 || res->status == 504) {
    return failure(CompletionError::Kind::Timeout, "upstream timeout (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status >= 500) {
    return failure(CompletionError::Kind::Network, "server error (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    return failure(CompletionError::Kind::Malformed, "unexpected HTTP " + std::to_string(res->status));
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error&) {
    return failure(CompletionError::Kind::Malformed, "response body is not JSON");
  }
}

}  // namespace

Completion OpenAiBackend::send(const std::string& prompt, const std::string& hash) {
  auto key = credential(cfg_);
  if (!key) return failure(CompletionError::Kind::Unavailable, cfg_.credential_variable() + " is not set");
  Json body{{"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"max_tokens", cfg_.max_tokens},
            {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})}};
  auto r = post_json(cfg_, "/chat/completions", body, {{"Authorization", "Bearer " + *key}});
  if (auto* c = std::get_if<Completion>(&r)) {
    c->request_hash = hash;
    return *c;
  }
  const Json& j = std::get<Json>(r);
  Completion c;
  c.request_hash = hash;
  try {
    const Json& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw std::runtime_error("content is not a string");
    c.text = content.get<std::string>();
  } catch (const std::exception&) {
    c.error = CompletionError{CompletionError::Kind::Malformed, "response has no choices[0].message.content"};
    return c;
  }
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    c.usage.prompt_tokens = u->value("prompt_tokens", 0L);
    c.usage.completion_tokens = u->value("completion_tokens", 0L);
  }
  return c;
}

Completion GeminiBackend::send(const std::string& prompt, const std::string& hash) {
  auto key = credential(cfg_);
  if (!key) return failure(CompletionError::Kind::Unavailable, cfg_.credential_variable() + " is not set");
  Json body{{"contents", Json::array({Json{{"role", "user"}, {"parts", Json::array({Json{{"text", prompt}}})}}})},
            {"generationConfig", {{"temperature", cfg_.temperature}, {"maxOutputTokens", cfg_.max_tokens}}}};
  auto r = post_json(cfg_, "/models/" + cfg_.model + ":generateContent", body, {{"x-goog-api-key", *key}});
  if (auto* c = std::get_if<Completion>(&r)) {
    c->request_hash = hash;
    return *c;
  }
  const Json& j = std::get<Json>(r);
  Completion c;
  c.request_hash = hash;
  try {
    std::string text;
    for (const auto& part : j.at("candidates").at(0).at("content").at("parts")) text += part.at("text").get<std::string>();
    c.text = std::move(text);
  } catch (const std::exception&) {
    c.error = CompletionError{CompletionError::Kind::Malformed, "response has no candidates[0].content.parts"};
    return c;
  }
  if (auto u = j.find("usageMetadata"); u != j.end() && u->is_object()) {
    c.usage.prompt_tokens = u->value("promptTokenCount", 0L);
    c.usage.completion_tokens = u->value("candidatesTokenCount", 0L);
  }
  return c;
}

}  // namespace logichint
