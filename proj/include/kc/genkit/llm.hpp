#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <utility>

#include "kc/common/error.hpp"
#include "kc/common/io.hpp"
#include "kc/genkit/prompts.hpp"
#include "kc/genkit/types.hpp"

namespace kc::genkit {

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-5.2-chat-latest";
  std::string api_key_env = "KC_API_KEY";
  double timeout_s = 120.0;
  std::size_t max_retries = 3;
  std::size_t parallelism = 4;
  double backoff_initial_s = 1.0;
  double backoff_max_s = 30.0;
};

// ConfigError unless timeout_s > 0, the endpoint is an http(s) URL and the
// model and key variable names are non-empty.
void validate(const LlmConfig& c);
Json to_json(const LlmConfig& c);
LlmConfig llm_config_from_json(const Json& j, LlmConfig defaults = {});

// Reads the key from the configured environment variable. ConfigError when
// unset or empty.
std::string resolve_api_key(const LlmConfig& c);

// Two-message chat request. No sampling parameters are sent.
Json request_body(const std::string& model, const PromptBundle& bundle);
// Content address of a request: sha256 of its canonical JSON.
std::string request_key(const Json& body);

struct Completion {
  std::string text;
  int attempts = 1;  // HTTP attempts, including retries
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const PromptBundle& bundle) = 0;
  virtual const std::string& model() const = 0;
};

// Chat-completion over HTTP(S). Connection failures and statuses 408, 429
// and 5xx are retried up to max_retries times with exponential backoff;
// 401/403 raise ConfigError at once; any other status raises UpstreamError
// carrying it. Safe to call from several threads.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(LlmConfig config);
  Completion complete(const PromptBundle& bundle) override;
  const std::string& model() const override { return config_.model; }

 private:
  LlmConfig config_;
};

// Answers from transcripts recorded by an earlier run, without network
// access. A request with no stored transcript is a DataError.
class ReplayChatBackend : public ChatBackend {
 public:
  ReplayChatBackend(std::filesystem::path dir, std::string model);
  Completion complete(const PromptBundle& bundle) override;
  const std::string& model() const override { return model_; }

 private:
  std::filesystem::path dir_;
  std::string model_;
};

std::string complete(const LlmConfig& config, const PromptBundle& bundle);

// One JSON file per request, named by request_key. Existing files are never
// overwritten.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir);
  void record(const Json& request, const std::string& response, int attempts, const Json& outcome);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

// Completes the bundle and parses the text. A parse failure (DataError) is
// retried once with the format reminder appended; a second failure throws
// DataError. Every exchange is recorded when `store` is given.
template <typename Parse>
auto complete_and_parse(ChatBackend& backend, const PromptTemplates& templates, const PromptBundle& bundle,
                        TranscriptStore* store, Parse&& parse) -> decltype(parse(std::string{})) {
  PromptBundle request = bundle;
  for (int round = 0;; ++round) {
    const Completion c = backend.complete(request);
    try {
      auto parsed = parse(c.text);
      if (store) store->record(request_body(backend.model(), request), c.text, c.attempts, Json{{"ok", true}});
      return parsed;
    } catch (const DataError& e) {
      if (store)
        store->record(request_body(backend.model(), request), c.text, c.attempts,
                      Json{{"ok", false}, {"error", e.what()}});
      if (round == 1) throw DataError(std::string("response still malformed after a retry: ") + e.what());
      request = with_format_reminder(templates, bundle, e.what());
    }
  }
}

}  // namespace kc::genkit
