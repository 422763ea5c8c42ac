#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace argbot::llm {

using Millis = std::chrono::milliseconds;

struct CompletionRequest {
  std::string system_prompt;  // optional
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model;

  // Throws Error(InvalidArgument) when the user prompt is empty or the
  // temperature is negative.
  void validate() const;
};

struct GatewayPolicy {
  Millis timeout{20000};
  int retries = 1;
  Millis backoff{500};
  // Token bucket; 0 disables rate limiting.
  double rate_per_second = 0.0;
  int burst = 1;

  void validate() const;
};

// A provider. send() honors `timeout` and throws argbot::Error with one of
// GatewayTimeout, GatewayTransport (both retried), GatewayAuth or
// GatewayMalformed.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::string send(const CompletionRequest& request, Millis timeout) = 0;
};

class TokenBucket {
 public:
  TokenBucket(double rate_per_second, int burst);
  // Blocks until a token is available.
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

class Gateway {
 public:
  using Sleeper = std::function<void(Millis)>;

  explicit Gateway(std::shared_ptr<Backend> backend, Sleeper sleeper = {});

  // Text of the first successful attempt; at most 1 + policy.retries attempts.
  std::string complete(const CompletionRequest& request, const GatewayPolicy& policy);

  const Backend& backend() const { return *backend_; }
  std::uint64_t attempts() const { return attempts_.load(); }

 private:
  TokenBucket& bucket_for(const GatewayPolicy& policy);

  std::shared_ptr<Backend> backend_;
  Sleeper sleeper_;
  std::atomic<std::uint64_t> attempts_{0};
  std::mutex bucket_mutex_;
  std::unique_ptr<TokenBucket> bucket_;
  double bucket_rate_ = 0.0;
};

// ---------------------------------------------------------------------------
// Offline backends

// Argument name -> keyword aliases. File format: `name<TAB>alias1|alias2`.
class AliasTable {
 public:
  AliasTable() = default;
  static AliasTable parse(std::string_view content);
  static AliasTable load(const std::filesystem::path& path);

  void add(std::string_view name, std::vector<std::string> aliases);
  // The name itself followed by its aliases.
  std::vector<std::string> keywords(std::string_view name) const;
  // The keyword from keywords(name) found in `text`, if any.
  std::optional<std::string> match(std::string_view name, std::string_view text) const;
  std::size_t size() const { return aliases_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> aliases_;  // lower-cased name
};

// Tagged coverage reply for a detection prompt: an argument is mentioned iff
// its name or an alias occurs (case-insensitively) in the embedded log.
// Throws Error(ParseError) if the prompt does not follow the template.
std::string mock_coverage_response(std::string_view prompt, const AliasTable& aliases);

inline constexpr std::string_view kNoArgumentSentinel = "I cannot find an argument in this piece of text.";

// JSON annotation reply for one comment under the same matching rule; the
// sentinel record when nothing matches.
std::string mock_annotation_response(std::string_view system_prompt, std::string_view comment,
                                     const AliasTable& aliases);

// Deterministic stand-in LLM. Dispatches on prompt shape: detection prompts
// get coverage tags, annotation prompts get JSON, anything else a fixed hash
// reply.
class MockBackend : public Backend {
 public:
  explicit MockBackend(AliasTable aliases) : aliases_(std::move(aliases)) {}
  std::string name() const override { return "mock"; }
  std::string send(const CompletionRequest& request, Millis timeout) override;

 private:
  AliasTable aliases_;
  std::mutex cache_mutex_;
  std::string cached_system_;
  std::vector<std::string> cached_names_;
};

// Returns the prompt bytes unchanged (system, 0x1F separator, user).
class EchoBackend : public Backend {
 public:
  std::string name() const override { return "echo"; }
  std::string send(const CompletionRequest& request, Millis timeout) override;
};

// ---------------------------------------------------------------------------
// Chat-completion HTTP provider (messages array in, first choice text out).

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;

  // LLM_BASE_URL, LLM_API_KEY, LLM_MODEL.
  static HttpBackendConfig from_env();
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string name() const override { return "http"; }
  std::string send(const CompletionRequest& request, Millis timeout) override;

  // Request body sent for `request`; exposed for tests.
  std::string request_body(const CompletionRequest& request) const;

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace argbot::llm
