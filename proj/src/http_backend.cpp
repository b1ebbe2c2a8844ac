#include <httplib.h>

#include <cstdlib>

#include "hydroie/backends.hpp"

namespace hydroie {

void BackendConfig::validate() const {
  if (kind == BackendKind::Http && (!base_url || base_url->empty())) {
    throw ConfigError("http backend requires base_url");
  }
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (timeout_s <= 0) throw ConfigError("timeout_s must be positive");
}

BackendConfig backend_config_from_json(const json& j) {
  BackendConfig c;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "http") {
      c.kind = BackendKind::Http;
    } else if (kind == "scripted") {
      c.kind = BackendKind::Scripted;
    } else if (kind == "baseline") {
      c.kind = BackendKind::Baseline;
    } else {
      throw ConfigError("unknown backend kind: " + kind);
    }
    if (j.contains("base_url")) c.base_url = j.at("base_url").get<std::string>();
    if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("model")) c.model = j.at("model").get<std::string>();
    if (j.contains("script")) c.script_path = j.at("script").get<std::string>();
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    if (j.contains("api_key")) throw ConfigError("api keys must come from the environment (use api_key_env)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed backend config: ") + e.what());
  }
  c.validate();
  return c;
}

json backend_config_to_json(const BackendConfig& c) {
  json j;
  switch (c.kind) {
    case BackendKind::Http: j["kind"] = "http"; break;
    case BackendKind::Scripted: j["kind"] = "scripted"; break;
    case BackendKind::Baseline: j["kind"] = "baseline"; break;
  }
  if (c.base_url) j["base_url"] = *c.base_url;
  if (c.api_key_env) j["api_key_env"] = *c.api_key_env;
  if (c.model) j["model"] = *c.model;
  if (c.script_path) j["script"] = *c.script_path;
  j["timeout_s"] = c.timeout_s;
  j["max_retries"] = c.max_retries;
  j["max_in_flight"] = c.max_in_flight;
  j["backoff_initial_ms"] = c.backoff_initial_ms;
  return j;
}

HttpBackend::HttpBackend(const BackendConfig& config) : timeout_s_(config.timeout_s) {
  config.validate();
  const auto& url = *config.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config.api_key_env) {
    const char* key = std::getenv(config.api_key_env->c_str());
    if (key == nullptr) throw ConfigError("environment variable " + *config.api_key_env + " is not set");
    api_key_ = key;
  }
}

json HttpBackend::request_body(const GenerationRequest& request) {
  json msgs = json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  return {{"model", request.model_name},
          {"messages", std::move(msgs)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

RawReply HttpBackend::parse_response_body(const std::string& body) {
  RawReply reply;
  const auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    reply.status = 502;
    reply.error = "malformed chat-completions response: " + excerpt(body, 200);
    return reply;
  }
  const auto& choice = j["choices"][0];
  if (choice.contains("message") && choice["message"].is_object() && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    reply.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    reply.text = choice["text"].get<std::string>();
  }
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    reply.finish_reason = parse_finish_reason(choice["finish_reason"].get<std::string>());
  }
  return reply;
}

RawReply HttpBackend::send(const GenerationRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const auto body = dump_compact(request_body(request));
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  if (!res) {
    RawReply r;
    r.status = 0;
    r.error = httplib::to_string(res.error());
    return r;
  }
  if (res->status != 200) {
    RawReply r;
    r.status = res->status;
    r.error = excerpt(res->body, 200);
    return r;
  }
  return parse_response_body(res->body);
}

}  // namespace hydroie
