#include <algorithm>

#include "hydroie/backends.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

std::string all_null_json() {
  json j = json::object();
  for (const auto& f : builtin_schema().fields()) j[f.name] = nullptr;
  return dump_compact(j);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, bool strict, std::optional<std::string> default_text)
    : rules_(std::move(rules)), strict_(strict), default_text_(default_text.value_or(all_null_json())) {
  for (const auto& r : rules_) {
    if (r.fingerprint.has_value() == r.pattern.has_value()) {
      throw ConfigError("script rule needs exactly one of fingerprint or pattern");
    }
  }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& j) {
  std::vector<ScriptRule> rules;
  try {
    for (const auto& r : j.value("rules", json::array())) {
      ScriptRule rule;
      if (r.contains("fingerprint")) rule.fingerprint = r.at("fingerprint").get<std::string>();
      if (r.contains("pattern")) rule.pattern = r.at("pattern").get<std::string>();
      rule.response = r.at("response").get<std::string>();
      rule.finish_reason = parse_finish_reason(r.value("finish_reason", "stop"));
      rules.push_back(std::move(rule));
    }
    std::optional<std::string> def;
    if (j.contains("default")) def = j.at("default").get<std::string>();
    return std::make_shared<ScriptedBackend>(std::move(rules), j.value("strict", false), std::move(def));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed script: ") + e.what());
  }
}

void ScriptedBackend::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

void ScriptedBackend::inject_failures(std::vector<int> statuses) {
  std::lock_guard lock(mu_);
  failures_.insert(failures_.end(), statuses.begin(), statuses.end());
}

RawReply ScriptedBackend::send(const GenerationRequest& request) {
  Responder responder;
  {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    if (!failures_.empty()) {
      RawReply r;
      r.status = failures_.front();
      r.error = "injected failure";
      failures_.erase(failures_.begin());
      return r;
    }
    responder = responder_;
  }

  const auto key = cache_key(request);
  for (const auto& rule : rules_) {
    if (rule.fingerprint && *rule.fingerprint == key) return {200, rule.response, rule.finish_reason, {}};
  }
  const auto tag = to_string(request.method_tag);
  for (const auto& rule : rules_) {
    if (!rule.pattern) continue;
    const auto& p = *rule.pattern;
    const bool hit = p == tag || std::any_of(request.messages.begin(), request.messages.end(), [&](const Message& m) {
                       return m.text.find(p) != std::string::npos;
                     });
    if (hit) return {200, rule.response, rule.finish_reason, {}};
  }
  if (responder) {
    if (auto text = responder(request)) return {200, std::move(*text), FinishReason::Stop, {}};
  }
  if (strict_) {
    std::string prompt = request.messages.empty() ? std::string() : request.messages.back().text;
    throw ScriptError("no scripted response for " + std::string(tag) + " request " + key + ": " +
                      excerpt(prompt, 200));
  }
  return {200, default_text_, FinishReason::Stop, {}};
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::size_t ScriptedBackend::calls_with_tag(PromptTag tag) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(log_.begin(), log_.end(), [&](const auto& r) { return r.method_tag == tag; }));
}

std::vector<GenerationRequest> ScriptedBackend::request_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace hydroie
