#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hydroie/gateway.hpp"

namespace hydroie {

enum class BackendKind { Http, Scripted, Baseline };

struct BackendConfig {
  BackendKind kind = BackendKind::Scripted;
  std::optional<std::string> base_url;
  std::optional<std::string> api_key_env;  // name of the environment variable, never the key
  std::optional<std::string> model;        // remote model id; defaults to the harness model name
  std::optional<std::string> script_path;  // scripted kind
  int timeout_s = 120;
  int max_retries = 3;
  std::size_t max_in_flight = 4;
  int backoff_initial_ms = 500;

  // Throws ConfigError, e.g. http kind without base_url.
  void validate() const;
};

BackendConfig backend_config_from_json(const json& j);
json backend_config_to_json(const BackendConfig& c);

// POSTs {base_url}/chat/completions with a chat-completions JSON body.
class HttpBackend : public Backend {
 public:
  // Resolves the API key from the environment; throws ConfigError if the
  // named variable is unset.
  explicit HttpBackend(const BackendConfig& config);
  RawReply send(const GenerationRequest& request) override;

  static json request_body(const GenerationRequest& request);
  // Extracts text and finish_reason from a chat-completions response body.
  static RawReply parse_response_body(const std::string& body);

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
  int timeout_s_;
};

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScriptRule {
  // Exactly one of fingerprint / pattern is set. A pattern matches when it
  // equals the request's prompt tag or occurs in any message text.
  std::optional<std::string> fingerprint;
  std::optional<std::string> pattern;
  std::string response;
  FinishReason finish_reason = FinishReason::Stop;
};

// Deterministic in-process backend for tests and dry runs. Lookup order:
// fingerprint rules, pattern rules (first match), responder, default.
class ScriptedBackend : public Backend {
 public:
  using Responder = std::function<std::optional<std::string>(const GenerationRequest&)>;

  explicit ScriptedBackend(std::vector<ScriptRule> rules = {}, bool strict = false,
                           std::optional<std::string> default_text = std::nullopt);

  static std::shared_ptr<ScriptedBackend> from_json(const json& j);

  void set_responder(Responder responder);
  // Statuses returned, in order, before any scripted reply.
  void inject_failures(std::vector<int> statuses);

  RawReply send(const GenerationRequest& request) override;

  std::size_t calls() const;
  std::size_t calls_with_tag(PromptTag tag) const;
  std::vector<GenerationRequest> request_log() const;

 private:
  std::vector<ScriptRule> rules_;
  bool strict_;
  std::string default_text_;
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<int> failures_;
  std::vector<GenerationRequest> log_;
};

// JSON object with every builtin field set to null.
std::string all_null_json();

}  // namespace hydroie
