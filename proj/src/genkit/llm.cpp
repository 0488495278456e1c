#include "kc/genkit/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"

namespace kc::genkit {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("LLM endpoint '" + url + "' is not an http(s) URL");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

std::string extract_content(const std::string& body, int status) {
  try {
    const auto j = Json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw UpstreamError(std::string("chat completion response is not usable: ") + e.what(), status);
  }
}

}  // namespace

void validate(const LlmConfig& c) {
  if (!(c.timeout_s > 0)) throw ConfigError("llm.timeout_s must be positive");
  if (c.model.empty()) throw ConfigError("llm.model is empty");
  if (c.api_key_env.empty()) throw ConfigError("llm.api_key_env is empty");
  if (c.parallelism == 0) throw ConfigError("llm.parallelism must be at least 1");
  if (c.backoff_initial_s < 0 || c.backoff_max_s < 0) throw ConfigError("llm backoff must be non-negative");
  split_endpoint(c.endpoint);
}

Json to_json(const LlmConfig& c) {
  return Json{{"endpoint", c.endpoint},       {"model", c.model},
              {"api_key_env", c.api_key_env}, {"timeout_s", c.timeout_s},
              {"max_retries", c.max_retries}, {"parallelism", c.parallelism},
              {"backoff_initial_s", c.backoff_initial_s}, {"backoff_max_s", c.backoff_max_s}};
}

LlmConfig llm_config_from_json(const Json& j, LlmConfig c) {
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    if (j.contains("max_retries") && j["max_retries"].is_number_integer() && j["max_retries"].get<long long>() < 0)
      throw ConfigError("llm.max_retries must be >= 0");
    c.max_retries = j.value("max_retries", c.max_retries);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.backoff_initial_s = j.value("backoff_initial_s", c.backoff_initial_s);
    c.backoff_max_s = j.value("backoff_max_s", c.backoff_max_s);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad llm config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string resolve_api_key(const LlmConfig& c) {
  const char* key = std::getenv(c.api_key_env.c_str());
  if (!key || !*key) throw ConfigError("API key variable " + c.api_key_env + " is not set");
  return key;
}

Json request_body(const std::string& model, const PromptBundle& bundle) {
  return Json{{"model", model},
              {"messages", Json::array({Json{{"role", "system"}, {"content", bundle.system_text}},
                                        Json{{"role", "user"}, {"content", bundle.user_text}}})}};
}

std::string request_key(const Json& body) { return sha256_hex(canonical_dump(body)); }

HttpChatBackend::HttpChatBackend(LlmConfig config) : config_(std::move(config)) { validate(config_); }

Completion HttpChatBackend::complete(const PromptBundle& bundle) {
  const std::string key = resolve_api_key(config_);
  const Endpoint ep = split_endpoint(config_.endpoint);
  const std::string payload = request_body(config_.model, bundle).dump();
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);

  std::string last_failure;
  int last_status = 0;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = std::min(config_.backoff_max_s, config_.backoff_initial_s * std::ldexp(1.0, static_cast<int>(attempt) - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    httplib::Client cli(ep.origin);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    const httplib::Headers headers{{"Authorization", "Bearer " + key}};
    const auto res = cli.Post(ep.path, headers, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 200 && res->status < 300)
      return Completion{extract_content(res->body, res->status), static_cast<int>(attempt) + 1};
    if (res->status == 401 || res->status == 403)
      throw ConfigError("LLM endpoint rejected the API key (HTTP " + std::to_string(res->status) + ")");
    if (!transient(res->status))
      throw UpstreamError("LLM endpoint returned HTTP " + std::to_string(res->status), res->status);
    last_failure = "HTTP " + std::to_string(res->status);
    last_status = res->status;
  }
  throw UpstreamError("LLM request failed after " + std::to_string(config_.max_retries + 1) +
                          " attempts: " + last_failure,
                      last_status);
}

ReplayChatBackend::ReplayChatBackend(std::filesystem::path dir, std::string model)
    : dir_(std::move(dir)), model_(std::move(model)) {}

Completion ReplayChatBackend::complete(const PromptBundle& bundle) {
  const auto key = request_key(request_body(model_, bundle));
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) throw DataError("no stored transcript for request " + key + " in " + dir_.string());
  try {
    const auto j = Json::parse(read_file(path));
    return Completion{j.at("response").get<std::string>(), 0};
  } catch (const Json::exception& e) {
    throw DataError("unreadable transcript " + path.string() + ": " + e.what());
  }
}

std::string complete(const LlmConfig& config, const PromptBundle& bundle) {
  HttpChatBackend backend(config);
  return backend.complete(bundle).text;
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void TranscriptStore::record(const Json& request, const std::string& response, int attempts, const Json& outcome) {
  const auto path = dir_ / (request_key(request) + ".json");
  std::lock_guard lock(mutex_);
  if (std::filesystem::exists(path)) return;
  const Json entry{{"request", request}, {"response", response}, {"attempts", attempts}, {"outcome", outcome}};
  write_file_atomic(path, canonical_dump(entry) + "\n");
}

}  // namespace kc::genkit
