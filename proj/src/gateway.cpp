#include "hydroie/gateway.hpp"

#include <algorithm>
#include <thread>

namespace hydroie {

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop" || s.empty()) return FinishReason::Stop;
  if (s == "length") return FinishReason::Length;
  return FinishReason::Error;
}

GenerationRequest GenerationRequest::from_bundle(const PromptBundle& bundle, std::string model_name,
                                                 int max_tokens) {
  GenerationRequest r;
  r.model_name = std::move(model_name);
  r.messages = bundle.messages;
  r.max_tokens = max_tokens;
  r.method_tag = bundle.method_tag;
  return r;
}

std::string canonical_request(const GenerationRequest& request) {
  json msgs = json::array();
  for (const auto& m : request.messages) msgs.push_back({{"content", m.text}, {"role", to_string(m.role)}});
  json j = {{"max_tokens", request.max_tokens},
            {"messages", std::move(msgs)},
            {"model", request.model_name},
            {"temperature", request.temperature}};
  return dump_compact(j);
}

std::string cache_key(const GenerationRequest& request) { return sha256_hex(canonical_request(request)); }

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (!backend_) throw ConfigError("gateway requires a backend");
  if (options_.max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  if (options_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

GenerationResponse Gateway::complete(const GenerationRequest& request) {
  if (!options_.cache_enabled) {
    {
      std::lock_guard lock(mu_);
      ++stats_.requests;
    }
    return complete_uncached(request);
  }

  const auto key = cache_key(request);
  std::promise<GenerationResponse> promise;
  std::shared_future<GenerationResponse> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    ++stats_.requests;
    if (auto it = memo_.find(key); it != memo_.end()) {
      future = it->second;
      ++stats_.cache_hits;
    } else {
      future = promise.get_future().share();
      memo_.emplace(key, future);
      owner = true;
    }
  }

  if (!owner) {
    auto r = future.get();
    r.from_cache = true;
    r.latency_ms = 0;
    return r;
  }

  try {
    if (auto hit = disk_lookup(key)) {
      {
        std::lock_guard lock(mu_);
        ++stats_.cache_hits;
      }
      promise.set_value(*hit);
      return *hit;
    }
    auto r = complete_uncached(request);
    disk_store(key, request, r);
    promise.set_value(r);
    return r;
  } catch (...) {
    // Failures are not memoized; a later call may succeed.
    {
      std::lock_guard lock(mu_);
      memo_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

GenerationResponse Gateway::complete_uncached(const GenerationRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  auto delay = options_.backoff_initial;
  const int max_attempts = options_.max_retries + 1;
  RawReply last;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    last = send_bounded(request);
    if (last.status == 200) {
      GenerationResponse r;
      r.text = std::move(last.text);
      r.finish_reason = last.finish_reason;
      r.latency_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      return r;
    }
    if (last.status == 401 || last.status == 403) {
      throw ConfigError("backend rejected credentials (HTTP " + std::to_string(last.status) + "): " + last.error);
    }
    const bool transient = last.status == 0 || last.status == 429 || last.status >= 500;
    if (!transient) {
      throw TransportError("backend returned HTTP " + std::to_string(last.status) + ": " + last.error, attempt,
                           last.status);
    }
    if (attempt < max_attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::min(options_.backoff_max, std::chrono::milliseconds(static_cast<std::int64_t>(
                                                 static_cast<double>(delay.count()) * options_.backoff_multiplier)));
    }
  }
  throw TransportError("request failed after " + std::to_string(max_attempts) + " attempts (last status " +
                           std::to_string(last.status) + "): " + last.error,
                       max_attempts, last.status);
}

RawReply Gateway::send_bounded(const GenerationRequest& request) {
  {
    std::unique_lock lock(mu_);
    slot_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
    ++stats_.backend_attempts;
    stats_.peak_in_flight = std::max(stats_.peak_in_flight, in_flight_);
  }
  struct Release {
    Gateway* g;
    ~Release() {
      {
        std::lock_guard lock(g->mu_);
        --g->in_flight_;
      }
      g->slot_cv_.notify_one();
    }
  } release{this};
  return backend_->send(request);
}

std::optional<GenerationResponse> Gateway::disk_lookup(const std::string& key) const {
  if (!options_.cache_dir) return std::nullopt;
  const auto path = *options_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto j = json::parse(read_file(path));
    if (j.at("fingerprint").get<std::string>() != key) return std::nullopt;
    GenerationResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
    r.from_cache = true;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;  // corrupt entry: refetch and overwrite
  }
}

void Gateway::disk_store(const std::string& key, const GenerationRequest& request,
                         const GenerationResponse& response) const {
  if (!options_.cache_dir) return;
  const json j = {{"fingerprint", key},
                  {"model", request.model_name},
                  {"method_tag", to_string(request.method_tag)},
                  {"text", response.text},
                  {"finish_reason", to_string(response.finish_reason)}};
  write_file_atomic(*options_.cache_dir / key.substr(0, 2) / (key + ".json"), dump_pretty(j));
}

}  // namespace hydroie
