#include "argbot/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "argbot/error.hpp"
#include "argbot/prompt_templates.hpp"
#include "argbot/text.hpp"

namespace argbot::llm {

void CompletionRequest::validate() const {
  if (user_prompt.empty()) throw Error(Errc::InvalidArgument, "completion request has an empty user prompt");
  if (!(temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
  if (max_tokens <= 0) throw Error(Errc::InvalidArgument, "max_tokens must be positive");
}

void GatewayPolicy::validate() const {
  if (retries < 0) throw Error(Errc::InvalidArgument, "retries must be >= 0");
  if (timeout.count() <= 0) throw Error(Errc::InvalidArgument, "timeout must be positive");
  if (rate_per_second < 0.0) throw Error(Errc::InvalidArgument, "rate must be >= 0");
}

// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double rate_per_second, int burst)
    : rate_(rate_per_second),
      capacity_(std::max(1, burst)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / rate_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    lock.lock();
  }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, Sleeper sleeper)
    : backend_(std::move(backend)), sleeper_(std::move(sleeper)) {
  if (!backend_) throw Error(Errc::InvalidArgument, "gateway needs a backend");
  if (!sleeper_) sleeper_ = [](Millis d) { std::this_thread::sleep_for(d); };
}

TokenBucket& Gateway::bucket_for(const GatewayPolicy& policy) {
  std::lock_guard lock(bucket_mutex_);
  if (!bucket_ || bucket_rate_ != policy.rate_per_second) {
    bucket_ = std::make_unique<TokenBucket>(policy.rate_per_second, policy.burst);
    bucket_rate_ = policy.rate_per_second;
  }
  return *bucket_;
}

std::string Gateway::complete(const CompletionRequest& request, const GatewayPolicy& policy) {
  request.validate();
  policy.validate();
  for (int attempt = 0;; ++attempt) {
    if (policy.rate_per_second > 0.0) bucket_for(policy).acquire();
    ++attempts_;
    try {
      return backend_->send(request, policy.timeout);
    } catch (const Error& e) {
      const bool retryable = e.code() == Errc::GatewayTimeout || e.code() == Errc::GatewayTransport;
      if (!retryable || attempt >= policy.retries) throw;
      sleeper_(policy.backoff * (attempt + 1));
    }
  }
}

// ---------------------------------------------------------------------------

AliasTable AliasTable::parse(std::string_view content) {
  AliasTable table;
  for (const auto& raw : text::split(content, '\n')) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(Errc::ParseError, "alias line without TAB: " + line);
    std::vector<std::string> aliases;
    for (const auto& a : text::split(std::string_view(line).substr(tab + 1), '|')) {
      std::string t = text::trim(a);
      if (!t.empty()) aliases.push_back(std::move(t));
    }
    table.add(line.substr(0, tab), std::move(aliases));
  }
  return table;
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open alias table: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void AliasTable::add(std::string_view name, std::vector<std::string> aliases) {
  auto& slot = aliases_[text::to_lower(text::trim(name))];
  for (auto& a : aliases) slot.push_back(std::move(a));
}

std::vector<std::string> AliasTable::keywords(std::string_view name) const {
  std::vector<std::string> out{text::trim(name)};
  auto it = aliases_.find(text::to_lower(text::trim(name)));
  if (it != aliases_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  return out;
}

std::optional<std::string> AliasTable::match(std::string_view name, std::string_view haystack) const {
  for (const auto& kw : keywords(name)) {
    if (text::icontains(haystack, kw)) return kw;
  }
  return std::nullopt;
}

std::string mock_coverage_response(std::string_view prompt, const AliasTable& aliases) {
  const auto parts = prompts::parse_detection(prompt);
  if (!parts) throw Error(Errc::ParseError, "mock coverage backend: prompt does not follow the detection template");
  std::vector<std::string> mentioned;
  std::vector<std::string> missing;
  for (const auto& name : prompts::split_argument_list(parts->arguments_list)) {
    (aliases.match(name, parts->log) ? mentioned : missing).push_back(name);
  }
  std::string out = "<arguments_mentioned>";
  out += mentioned.empty() ? "None" : text::join(mentioned, ", ");
  out += "</arguments_mentioned>\n<arguments_not>";
  out += text::join(missing, ", ");
  out += "</arguments_not>";
  return out;
}

namespace {

std::string annotation_json(const std::vector<std::string>& names, std::string_view comment,
                            const AliasTable& aliases) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& name : names) {
    if (auto kw = aliases.match(name, comment)) {
      records.push_back({{"name", name}, {"explanation", "The comment mentions '" + *kw + "'."}});
    }
  }
  if (records.empty()) records.push_back({{"name", std::string(kNoArgumentSentinel)}, {"explanation", ""}});
  return nlohmann::json{{"arguments", records}}.dump();
}

}  // namespace

std::string mock_annotation_response(std::string_view system_prompt, std::string_view comment,
                                     const AliasTable& aliases) {
  const auto list = prompts::parse_annotation_system(system_prompt);
  if (!list) throw Error(Errc::ParseError, "mock annotation backend: system prompt lacks the argument list");
  return annotation_json(prompts::split_argument_lines(*list), comment, aliases);
}

std::string MockBackend::send(const CompletionRequest& request, Millis) {
  if (prompts::parse_detection(request.user_prompt)) return mock_coverage_response(request.user_prompt, aliases_);
  if (auto comment = prompts::parse_annotation_user(request.user_prompt)) {
    std::vector<std::string> names;
    {
      std::lock_guard lock(cache_mutex_);
      if (request.system_prompt != cached_system_) {
        const auto list = prompts::parse_annotation_system(request.system_prompt);
        if (!list) throw Error(Errc::ParseError, "mock annotation backend: system prompt lacks the argument list");
        cached_system_ = request.system_prompt;
        cached_names_ = prompts::split_argument_lines(*list);
      }
      names = cached_names_;
    }
    return annotation_json(names, *comment, aliases_);
  }
  return "mock-" + text::hex64(text::fnv1a(request.system_prompt + '\x1f' + request.user_prompt));
}

std::string EchoBackend::send(const CompletionRequest& request, Millis) {
  return request.system_prompt + '\x1f' + request.user_prompt;
}

// ---------------------------------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
  auto get = [](const char* key) {
    const char* v = std::getenv(key);
    return v ? std::string(v) : std::string();
  };
  HttpBackendConfig c{get("LLM_BASE_URL"), get("LLM_API_KEY"), get("LLM_MODEL")};
  if (c.base_url.empty()) throw Error(Errc::InvalidConfig, "LLM_BASE_URL is not set");
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidConfig, "base URL needs a scheme: " + config_.base_url);
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpBackend::request_body(const CompletionRequest& request) const {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  nlohmann::json body = {{"model", request.model.empty() ? config_.model : request.model},
                         {"messages", messages},
                         {"temperature", request.temperature},
                         {"max_tokens", request.max_tokens}};
  return body.dump();
}

std::string HttpBackend::send(const CompletionRequest& request, Millis timeout) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, request_body(request), "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || elapsed >= timeout * 9 / 10) {
      throw Error(Errc::GatewayTimeout, "provider timed out after " + std::to_string(timeout.count()) + " ms");
    }
    throw Error(Errc::GatewayTransport, "provider request failed: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(Errc::GatewayAuth, "provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(Errc::GatewayTransport, "provider unavailable (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw Error(Errc::GatewayMalformed, "unexpected provider status " + std::to_string(res->status));
  }
  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(Errc::GatewayMalformed, "provider payload is not JSON");
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::GatewayMalformed, "provider payload lacks choices[0].message.content");
  }
}

}  // namespace argbot::llm
