#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memod/corpus.hpp"
#include "memod/promptkit.hpp"

#include <json.hpp>

namespace memod {

enum class AgentKind { caption, explanation, commonsense, intervention };

std::string to_string(AgentKind kind);

struct AgentEndpoint {
  AgentKind kind = AgentKind::caption;
  std::string url;
  std::string model_name;
  std::string auth_env;          // env var holding the bearer token
  double temperature = 0.001;
  int max_new_tokens = 100;

  std::string fingerprint() const;  // endpoint+model identifier
};

struct EndpointError : Error {
  EndpointError(int status, const std::string& body);
  int status;
  std::string body;
};
struct EmptyCompletion : Error {
  using Error::Error;
};
struct GuardViolation : Error {
  using Error::Error;
};

struct ChatRequest {
  std::string model;
  nlohmann::ordered_json messages;
  double temperature = 0.001;
  int max_tokens = 100;

  nlohmann::ordered_json to_json() const;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string fingerprint() const = 0;
};

// 3 attempts, exponential backoff from 1s; retries only transport
// errors and 408/429/5xx.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

// Thrown by an operation to signal a retryable failure.
struct RetryableError : Error {
  using Error::Error;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Runs op under the policy; rethrows the last error once attempts are
// exhausted. Non-retryable errors pass through immediately.
std::string run_with_retries(const std::function<std::string()>& op, const RetryPolicy& policy,
                             const SleepFn& sleep_fn = {});

class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string url, std::string auth_env, RetryPolicy policy = {},
                  SleepFn sleep_fn = {});
  std::string complete(const ChatRequest& request) override;
  std::string fingerprint() const override;

 private:
  std::string url_;
  std::string auth_env_;
  RetryPolicy policy_;
  SleepFn sleep_fn_;
};

// Deterministic digest-derived words; the hermetic stand-in for every
// agent endpoint.
class MockChatBackend : public ChatBackend {
 public:
  explicit MockChatBackend(std::uint64_t seed = 0);
  std::string complete(const ChatRequest& request) override;
  std::string fingerprint() const override;
  int request_count() const { return request_count_; }

 private:
  std::uint64_t seed_;
  int request_count_ = 0;
};

// Mock inference model: emits prediction-shaped completions
// ("<label> - ... - Intervention - ...") keyed off the request digest.
class MockModelBackend : public ChatBackend {
 public:
  explicit MockModelBackend(LabelTokens labels, std::uint64_t seed = 0);
  std::string complete(const ChatRequest& request) override;
  std::string fingerprint() const override;

 private:
  LabelTokens labels_;
  std::uint64_t seed_;
};

// Instruction templates wrapped around each agent request. Placeholders:
// {ocr_text}, {label}, {commonsense}.
struct AgentTemplates {
  std::string caption;
  std::string explanation;
  std::string commonsense;
  std::string intervention;

  static AgentTemplates defaults();
  static AgentTemplates load_dir(const std::string& dir);  // <dir>/<kind>.txt overrides
  const std::string& for_kind(AgentKind kind) const;
};

// One agent endpoint client with an in-memory completion cache keyed by
// (record_id, kind, label conditioning, endpoint fingerprint).
class AgentClient {
 public:
  AgentClient(AgentEndpoint endpoint, std::shared_ptr<ChatBackend> backend,
              AgentTemplates templates = AgentTemplates::defaults());

  std::string generate_caption(const MemeRecord& record);
  std::string generate_explanation(const MemeRecord& record, Label gold_label,
                                   const std::string& gold_label_text);
  std::string generate_commonsense(const MemeRecord& record);
  // Guarded: never invoked for negative records.
  std::string generate_intervention(const MemeRecord& record, const std::string& commonsense);

  const AgentEndpoint& endpoint() const { return endpoint_; }
  int request_count() const { return request_count_; }

 private:
  std::string complete_cached(const std::string& cache_key, const MemeRecord& record,
                              const std::string& instruction);

  AgentEndpoint endpoint_;
  std::shared_ptr<ChatBackend> backend_;
  AgentTemplates templates_;
  std::map<std::string, std::string> cache_;
  std::mutex mutex_;
  int request_count_ = 0;
};

struct AgentSet {
  std::shared_ptr<AgentClient> caption;
  std::shared_ptr<AgentClient> explanation;
  std::shared_ptr<AgentClient> commonsense;
  std::shared_ptr<AgentClient> intervention;
};

struct EnrichOptions {
  bool captions_only = false;  // test split: captions for the test turn, nothing gold-conditioned
  int in_flight = 4;
};

struct EnrichmentReport {
  std::vector<std::pair<std::string, std::string>> failures;  // (record_id, error)
  int requests_made = 0;

  bool ok() const { return failures.empty(); }
};

// Fills the store so every record has caption+explanation and every
// positive record a commonsense-derived intervention. Idempotent: a
// complete store triggers no endpoint calls. Failed records are
// reported; completed entries persist.
EnrichmentReport enrich_pool(const DatasetManifest& manifest, AgentSet& agents,
                             SilverStore& store, const EnrichOptions& options = {});

}  // namespace memod
