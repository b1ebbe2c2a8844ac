#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hydroie/prompts.hpp"
#include "hydroie/util.hpp"

namespace hydroie {

enum class FinishReason { Stop, Length, Error };
std::string_view to_string(FinishReason f);
FinishReason parse_finish_reason(std::string_view s);

inline constexpr int kExtractionMaxTokens = 2048;
inline constexpr int kValidationMaxTokens = 512;

struct GenerationRequest {
  std::string model_name;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = kExtractionMaxTokens;
  // Routing metadata for scripted backends and call accounting. Not part of
  // the fingerprint: the messages already determine the template.
  PromptTag method_tag = PromptTag::SingleStep;

  static GenerationRequest from_bundle(const PromptBundle& bundle, std::string model_name, int max_tokens);
};

struct GenerationResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
};

// Canonical JSON text hashed by cache_key(): sorted keys, compact.
std::string canonical_request(const GenerationRequest& request);
// SHA-256 hex over canonical_request().
std::string cache_key(const GenerationRequest& request);

// What a backend returns for one attempt. status 0 means the request never
// produced an HTTP status (timeout, refused connection).
struct RawReply {
  int status = 200;
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::string error;  // transport detail for non-200 replies
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual RawReply send(const GenerationRequest& request) = 0;
};

// Retries exhausted or a non-retryable HTTP status.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts, int last_status)
      : std::runtime_error(what), attempts_(attempts), last_status_(last_status) {}
  int attempts() const { return attempts_; }
  int last_status() const { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

struct GatewayOptions {
  int max_retries = 3;  // additional attempts after the first
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds backoff_initial{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds backoff_max{30000};
  bool cache_enabled = true;
  std::optional<std::filesystem::path> cache_dir;  // persistent cache; memory-only when empty
};

struct GatewayStats {
  std::size_t requests = 0;         // calls to complete()
  std::size_t cache_hits = 0;
  std::size_t backend_attempts = 0;  // every send(), retries included
  std::size_t peak_in_flight = 0;
};

// Thread-safe front door to a backend: bounded concurrency, a content
// addressed response cache, and retry with exponential backoff. Identical
// requests issued concurrently reach the backend once.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  GenerationResponse complete(const GenerationRequest& request);

  GatewayStats stats() const;
  const GatewayOptions& options() const { return options_; }

 private:
  GenerationResponse complete_uncached(const GenerationRequest& request);
  RawReply send_bounded(const GenerationRequest& request);
  std::optional<GenerationResponse> disk_lookup(const std::string& key) const;
  void disk_store(const std::string& key, const GenerationRequest& request, const GenerationResponse& response) const;

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<GenerationResponse>> memo_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  GatewayStats stats_;
};

}  // namespace hydroie
