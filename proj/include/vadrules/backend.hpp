#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "types.hpp"

namespace vadrules {

enum class BackendErrorKind { credential_missing, transport, malformed_response };

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message, std::string digest)
      : Error(ErrorCategory::backend, message + " [request " + digest + "]"),
        kind_(kind),
        digest_(std::move(digest)) {}

  BackendErrorKind kind() const { return kind_; }
  const std::string& digest() const { return digest_; }

 private:
  BackendErrorKind kind_;
  std::string digest_;
};

struct BackendConfig {
  std::string base_url;
  std::string model_id;
  std::string api_key_env;  // empty: endpoint needs no credential
  double temperature = 0.0;
  int max_retries = 2;
  std::chrono::milliseconds request_timeout{30000};
  std::optional<std::filesystem::path> cache_dir;
  std::size_t parallelism = 4;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_cap{8000};

  void validate() const {
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Request digests

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

/// Canonical serialization of the request fields. nlohmann::json keeps object
/// keys sorted, so the rendering is independent of construction order.
inline std::string canonical_request_json(const ChatExchange& exchange) {
  json j{{"model_id", exchange.model_id},
         {"temperature", exchange.temperature},
         {"messages", exchange.messages}};
  return j.dump();
}

/// Content address of a request: SHA-256 over the canonical serialization of
/// (model_id, messages, temperature). Stable across runs and platforms.
inline std::string cache_key(const ChatExchange& exchange) {
  return sha256_hex(canonical_request_json(exchange));
}

// ---------------------------------------------------------------------------
// Backend interface and offline implementations

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Sends one exchange and returns the model's reply text.
  virtual std::string chat(const ChatExchange& exchange) = 0;
};

struct ScriptedRule {
  std::string contains;  // substring matched against message contents; empty matches all
  std::string response;
};

/// Deterministic offline backend: first rule whose `contains` occurs in any
/// message content wins; otherwise the fallback text is returned.
class ScriptedBackend : public ChatBackend {
 public:
  ScriptedBackend() = default;
  ScriptedBackend(std::vector<ScriptedRule> rules, std::string fallback)
      : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

  std::string chat(const ChatExchange& exchange) override {
    exchange.validate();
    for (const auto& rule : rules_) {
      if (rule.contains.empty()) return rule.response;
      for (const auto& message : exchange.messages) {
        if (message.content.find(rule.contains) != std::string::npos) return rule.response;
      }
    }
    return fallback_;
  }

 private:
  std::vector<ScriptedRule> rules_;
  std::string fallback_;
};

/// Test/oracle backend driven by an arbitrary function of the exchange.
class FunctionBackend : public ChatBackend {
 public:
  explicit FunctionBackend(std::function<std::string(const ChatExchange&)> fn)
      : fn_(std::move(fn)) {}

  std::string chat(const ChatExchange& exchange) override { return fn_(exchange); }

 private:
  std::function<std::string(const ChatExchange&)> fn_;
};

// ---------------------------------------------------------------------------
// HTTP backend

struct TransportResult {
  bool ok = false;     // false: connection-level failure, see error
  int status = 0;
  std::string body;
  std::string error;
};

using Transport = std::function<TransportResult(const std::string& url, const std::string& bearer,
                                                const std::string& body,
                                                std::chrono::milliseconds timeout)>;

/// Splits an absolute URL into origin (scheme://host[:port]) and path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url must be an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline TransportResult httplib_transport(const std::string& url, const std::string& bearer,
                                         const std::string& body,
                                         std::chrono::milliseconds timeout) {
  TransportResult out;
  auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
  auto res = client.Post(path.empty() ? "/" : path, headers, body, "application/json");
  if (!res) {
    out.ok = false;
    out.error = "connection failed: " + httplib::to_string(res.error());
    return out;
  }
  out.ok = true;
  out.status = res->status;
  out.body = res->body;
  return out;
}

/// Chat-completions gateway: POST {base_url}/chat/completions, bearer token
/// from the environment variable named in the config, exponential backoff on
/// 429/5xx and connection failures.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(BackendConfig config, Transport transport = httplib_transport)
      : config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
  }

  std::string chat(const ChatExchange& exchange) override {
    exchange.validate();
    const std::string digest = cache_key(exchange);

    std::string bearer;
    if (!config_.api_key_env.empty()) {
      const char* value = std::getenv(config_.api_key_env.c_str());
      if (value == nullptr || *value == '\0') {
        throw BackendError(BackendErrorKind::credential_missing,
                           "credential environment variable '" + config_.api_key_env +
                               "' is not set",
                           digest);
      }
      bearer = value;
    }

    json body{{"model", exchange.model_id},
              {"messages", exchange.messages},
              {"temperature", exchange.temperature}};
    const std::string url = config_.base_url + "/chat/completions";
    const std::string payload = body.dump();

    auto backoff = config_.backoff_initial;
    const int max_attempts = config_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      TransportResult result = transport_(url, bearer, payload, config_.request_timeout);
      if (result.ok && result.status / 100 == 2) {
        return parse_first_choice(result.body, digest);
      }
      if (result.ok && (result.status == 401 || result.status == 403)) {
        throw BackendError(BackendErrorKind::credential_missing,
                           "credential rejected (HTTP " + std::to_string(result.status) + ")",
                           digest);
      }
      bool transient = !result.ok || result.status == 408 || result.status == 429 ||
                       result.status >= 500;
      last_error = result.ok ? "HTTP " + std::to_string(result.status) : result.error;
      if (!transient) {
        throw BackendError(BackendErrorKind::transport,
                           "non-retryable failure: " + last_error, digest);
      }
      if (attempt < max_attempts && backoff.count() > 0) {
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, config_.backoff_cap);
      }
    }
    throw BackendError(BackendErrorKind::transport,
                       "transport failure after " + std::to_string(max_attempts) +
                           " attempts: " + last_error,
                       digest);
  }

  const BackendConfig& config() const { return config_; }

 private:
  std::string parse_first_choice(const std::string& body, const std::string& digest) const {
    json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
      throw BackendError(BackendErrorKind::malformed_response, "response body is not JSON",
                         digest);
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
      throw BackendError(BackendErrorKind::malformed_response, "response has no choices",
                         digest);
    }
    const json& first = parsed["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      throw BackendError(BackendErrorKind::malformed_response,
                         "first choice has no message content", digest);
    }
    return first["message"]["content"].get<std::string>();
  }

  BackendConfig config_;
  Transport transport_;
};

// ---------------------------------------------------------------------------
// Content-addressed response cache

inline std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("short write to " + path.string());
}

/// Whole-file atomic write: temp file in the target directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  static std::atomic<unsigned> counter{0};
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << "." << counter.fetch_add(1);
  const std::filesystem::path tmp = path.string() + suffix.str();
  write_file_text(tmp, text);
  std::filesystem::rename(tmp, path);
}

/// Wraps any backend with a write-once, content-addressed file cache and a
/// digest log for run manifests. With no cache directory it only records
/// digests and forwards calls.
class CachedBackend : public ChatBackend {
 public:
  CachedBackend(ChatBackend& inner, std::optional<std::filesystem::path> dir)
      : inner_(inner), dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  std::string chat(const ChatExchange& exchange) override {
    const std::string digest = cache_key(exchange);
    record(digest);
    if (dir_) {
      const auto path = entry_path(digest);
      if (std::filesystem::exists(path)) return read_file_text(path);
    }
    std::string response = inner_.chat(exchange);
    if (dir_) {
      const auto path = entry_path(digest);
      if (!std::filesystem::exists(path)) write_file_atomic(path, response);
    }
    return response;
  }

  std::vector<std::string> digests_used() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return digests_;
  }

 private:
  std::filesystem::path entry_path(const std::string& digest) const {
    return *dir_ / (digest + ".txt");
  }

  void record(const std::string& digest) {
    std::lock_guard<std::mutex> lock(mutex_);
    digests_.push_back(digest);
  }

  ChatBackend& inner_;
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::vector<std::string> digests_;
};

// ---------------------------------------------------------------------------
// Bounded parallel execution

/// Runs fn(0..count-1) on at most `parallelism` threads. The first exception
/// wins; remaining work is abandoned.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t parallelism, Fn&& fn) {
  if (count == 0) return;
  parallelism = std::min(std::max<std::size_t>(parallelism, 1), count);
  if (parallelism == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(parallelism);
  for (std::size_t w = 0; w < parallelism; ++w) {
    workers.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace vadrules
