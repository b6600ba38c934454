#include "memod/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "memod/text.hpp"

namespace memod {

using ordered_json = nlohmann::ordered_json;

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::caption: return "caption";
    case AgentKind::explanation: return "explanation";
    case AgentKind::commonsense: return "commonsense";
    case AgentKind::intervention: return "intervention";
  }
  return "caption";
}

std::string AgentEndpoint::fingerprint() const {
  return to_string(kind) + "@" + url + "#" + model_name;
}

EndpointError::EndpointError(int status_, const std::string& body_)
    : Error("endpoint error, status " + std::to_string(status_) +
            (body_.empty() ? "" : ": " + body_)),
      status(status_), body(body_) {}

ordered_json ChatRequest::to_json() const {
  ordered_json obj;
  obj["model"] = model;
  obj["messages"] = messages;
  obj["temperature"] = temperature;
  obj["max_tokens"] = max_tokens;
  return obj;
}

std::string run_with_retries(const std::function<std::string()>& op, const RetryPolicy& policy,
                             const SleepFn& sleep_fn) {
  auto backoff = policy.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    try {
      return op();
    } catch (const RetryableError& e) {
      last_error = e.what();
      if (attempt == policy.max_attempts) break;
      if (sleep_fn) {
        sleep_fn(backoff);
      } else {
        std::this_thread::sleep_for(backoff);
      }
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
  }
  throw EndpointError(-1, "retries exhausted: " + last_error);
}

HttpChatBackend::HttpChatBackend(std::string url, std::string auth_env, RetryPolicy policy,
                                 SleepFn sleep_fn)
    : url_(std::move(url)), auth_env_(std::move(auth_env)), policy_(policy),
      sleep_fn_(std::move(sleep_fn)) {}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  auto slash = url_.find('/', url_.find("//") + 2);
  std::string host = slash == std::string::npos ? url_ : url_.substr(0, slash);
  std::string route = slash == std::string::npos ? "/" : url_.substr(slash);
  std::string body = request.to_json().dump();

  return run_with_retries(
      [&]() -> std::string {
        httplib::Client client(host);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!auth_env_.empty()) {
          const char* token = std::getenv(auth_env_.c_str());
          if (token != nullptr) headers.emplace("Authorization", std::string("Bearer ") + token);
        }
        auto res = client.Post(route, headers, body, "application/json");
        if (!res) throw RetryableError("transport error talking to " + url_);
        if (res->status == 408 || res->status == 429 || res->status >= 500)
          throw RetryableError("status " + std::to_string(res->status) + " from " + url_);
        if (res->status < 200 || res->status >= 300) throw EndpointError(res->status, res->body);
        ordered_json parsed = ordered_json::parse(res->body);
        std::string content =
            parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        if (trim(content).empty()) throw EmptyCompletion("endpoint returned an empty completion");
        return content;
      },
      policy_, sleep_fn_);
}

std::string HttpChatBackend::fingerprint() const { return "http@" + url_; }

namespace {

// Stable digest-to-words vocabulary for the mock backends.
constexpr const char* kMockWords[] = {
    "meme",    "image",   "group",    "person",   "mocks",   "targets", "humor",   "joke",
    "context", "symbol",  "culture",  "online",   "post",    "caption", "text",    "message",
    "harm",    "respect", "dignity",  "identity", "stereotype", "faith", "gender", "community",
    "avoid",   "promote", "consider", "reflect",  "kind",    "tone",    "content", "shared"};

std::string digest_words(std::uint64_t digest, int count) {
  std::ostringstream out;
  std::uint64_t state = digest;
  for (int i = 0; i < count; ++i) {
    if (i > 0) out << " ";
    out << kMockWords[splitmix64(state) % (sizeof(kMockWords) / sizeof(kMockWords[0]))];
  }
  return out.str();
}

}  // namespace

MockChatBackend::MockChatBackend(std::uint64_t seed) : seed_(seed) {}

std::string MockChatBackend::complete(const ChatRequest& request) {
  ++request_count_;
  std::uint64_t digest = fnv1a64(request.to_json().dump(), 0x9e3779b97f4a7c15ull ^ seed_);
  return digest_words(digest, 6);
}

std::string MockChatBackend::fingerprint() const {
  return "mock-chat/seed=" + std::to_string(seed_);
}

MockModelBackend::MockModelBackend(LabelTokens labels, std::uint64_t seed)
    : labels_(std::move(labels)), seed_(seed) {}

std::string MockModelBackend::complete(const ChatRequest& request) {
  std::uint64_t digest = fnv1a64(request.to_json().dump(), 0x6a09e667f3bcc909ull ^ seed_);
  bool positive = (digest & 1) == 0;
  std::string explanation = digest_words(digest >> 1, 5);
  if (!positive) return labels_.negative + " - " + explanation + ".";
  std::string intervention = digest_words(digest >> 7, 5);
  return labels_.positive + " - " + explanation + ". Intervention - " + intervention + ".";
}

std::string MockModelBackend::fingerprint() const {
  return "mock-model/seed=" + std::to_string(seed_);
}

AgentTemplates AgentTemplates::defaults() {
  AgentTemplates t;
  t.caption =
      "Provide a meme-oriented caption for this meme. The text embedded in the meme is "
      "delimited by three backticks: ```{ocr_text}```";
  t.explanation =
      "This meme is {label}. Explain in 30 words why the meme is {label}. The text embedded "
      "in the meme is delimited by three backticks: ```{ocr_text}```";
  t.commonsense =
      "Provide the common sense reasoning that expresses why this meme could be harmful. The "
      "text embedded in the meme is delimited by three backticks: ```{ocr_text}```";
  t.intervention =
      "Using the following common sense reasoning, generate an intervention in 30 words for "
      "this hateful meme. Reasoning: {commonsense}. The text embedded in the meme is "
      "delimited by three backticks: ```{ocr_text}```";
  return t;
}

AgentTemplates AgentTemplates::load_dir(const std::string& dir) {
  AgentTemplates t = defaults();
  auto read_if_present = [&dir](const std::string& name, std::string& slot) {
    std::filesystem::path p = std::filesystem::path(dir) / (name + ".txt");
    std::ifstream in(p);
    if (!in) return;
    std::stringstream buffer;
    buffer << in.rdbuf();
    slot = trim(buffer.str());
  };
  read_if_present("caption", t.caption);
  read_if_present("explanation", t.explanation);
  read_if_present("commonsense", t.commonsense);
  read_if_present("intervention", t.intervention);
  return t;
}

const std::string& AgentTemplates::for_kind(AgentKind kind) const {
  switch (kind) {
    case AgentKind::caption: return caption;
    case AgentKind::explanation: return explanation;
    case AgentKind::commonsense: return commonsense;
    case AgentKind::intervention: return intervention;
  }
  return caption;
}

namespace {

std::string replace_all_copy(std::string text, const std::string& needle,
                             const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

AgentClient::AgentClient(AgentEndpoint endpoint, std::shared_ptr<ChatBackend> backend,
                         AgentTemplates templates)
    : endpoint_(std::move(endpoint)), backend_(std::move(backend)),
      templates_(std::move(templates)) {}

std::string AgentClient::complete_cached(const std::string& cache_key, const MemeRecord& record,
                                         const std::string& instruction) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(cache_key);
    if (it != cache_.end()) return it->second;
  }

  ChatTurn user;
  user.role = Role::user;
  user.parts.push_back(ContentPart::image_part(record.image));
  user.parts.push_back(ContentPart::text_part(instruction));

  ChatRequest request;
  request.model = endpoint_.model_name;
  request.messages = ordered_json::array({turn_to_message(user)});
  request.temperature = endpoint_.temperature;
  request.max_tokens = endpoint_.max_new_tokens;

  std::string completion = backend_->complete(request);
  if (trim(completion).empty()) throw EmptyCompletion("agent returned an empty completion");

  std::lock_guard<std::mutex> lock(mutex_);
  ++request_count_;
  return cache_[cache_key] = completion;
}

std::string AgentClient::generate_caption(const MemeRecord& record) {
  if (endpoint_.kind != AgentKind::caption) throw Error("endpoint is not a caption agent");
  std::string instruction = replace_all_copy(templates_.caption, "{ocr_text}", record.ocr_text);
  return complete_cached(record.id + "|caption||" + endpoint_.fingerprint(), record, instruction);
}

std::string AgentClient::generate_explanation(const MemeRecord& record, Label gold_label,
                                              const std::string& gold_label_text) {
  if (endpoint_.kind != AgentKind::explanation)
    throw Error("endpoint is not an explanation agent");
  // Label-aware: the gold label token goes into the request payload.
  std::string instruction = replace_all_copy(templates_.explanation, "{label}", gold_label_text);
  instruction = replace_all_copy(instruction, "{ocr_text}", record.ocr_text);
  return complete_cached(
      record.id + "|explanation|" + to_string(gold_label) + "|" + endpoint_.fingerprint(),
      record, instruction);
}

std::string AgentClient::generate_commonsense(const MemeRecord& record) {
  if (endpoint_.kind != AgentKind::commonsense)
    throw Error("endpoint is not a commonsense agent");
  std::string instruction =
      replace_all_copy(templates_.commonsense, "{ocr_text}", record.ocr_text);
  return complete_cached(record.id + "|commonsense||" + endpoint_.fingerprint(), record,
                         instruction);
}

std::string AgentClient::generate_intervention(const MemeRecord& record,
                                               const std::string& commonsense) {
  if (endpoint_.kind != AgentKind::intervention)
    throw Error("endpoint is not an intervention agent");
  if (record.gold_label != Label::positive)
    throw GuardViolation("intervention requested for negative-label record " + record.id);
  std::string instruction =
      replace_all_copy(templates_.intervention, "{commonsense}", commonsense);
  instruction = replace_all_copy(instruction, "{ocr_text}", record.ocr_text);
  return complete_cached(record.id + "|intervention||" + endpoint_.fingerprint(), record,
                         instruction);
}

namespace {

std::string raw_label_text(const DatasetManifest& manifest, Label label) {
  for (const auto& [raw, mapped] : manifest.label_vocabulary) {
    if (mapped == label) return raw;
  }
  return to_string(label);
}

}  // namespace

EnrichmentReport enrich_pool(const DatasetManifest& manifest, AgentSet& agents,
                             SilverStore& store, const EnrichOptions& options) {
  if (!agents.caption) throw Error("enrich_pool: caption agent not configured");
  if (!options.captions_only) {
    if (!agents.explanation) throw Error("enrich_pool: explanation agent not configured");
    if (manifest.positive_count() > 0 && (!agents.commonsense || !agents.intervention))
      throw Error("enrich_pool: commonsense+intervention agents required for positive records");
  }

  EnrichmentReport report;
  std::mutex store_mutex;
  std::atomic<std::size_t> next{0};
  int workers = std::max(1, std::min<int>(options.in_flight,
                                          static_cast<int>(manifest.records.size())));

  int requests_before = agents.caption->request_count() +
                        (agents.explanation ? agents.explanation->request_count() : 0) +
                        (agents.commonsense ? agents.commonsense->request_count() : 0) +
                        (agents.intervention ? agents.intervention->request_count() : 0);

  auto work = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= manifest.records.size()) break;
      const MemeRecord& record = manifest.records[i];

      SilverEnrichment entry;
      {
        std::lock_guard<std::mutex> lock(store_mutex);
        const SilverEnrichment* existing = store.find(record.id);
        if (existing != nullptr) {
          entry = *existing;
        } else {
          entry.record_id = record.id;
        }
      }

      try {
        bool changed = false;
        if (!entry.caption) {
          entry.caption = agents.caption->generate_caption(record);
          entry.agent_fingerprints["caption"] = agents.caption->endpoint().fingerprint();
          changed = true;
        }
        if (!options.captions_only) {
          if (!entry.explanation) {
            entry.explanation = agents.explanation->generate_explanation(
                record, record.gold_label, raw_label_text(manifest, record.gold_label));
            entry.agent_fingerprints["explanation"] =
                agents.explanation->endpoint().fingerprint();
            changed = true;
          }
          if (record.gold_label == Label::positive) {
            if (!entry.commonsense) {
              entry.commonsense = agents.commonsense->generate_commonsense(record);
              entry.agent_fingerprints["commonsense"] =
                  agents.commonsense->endpoint().fingerprint();
              changed = true;
            }
            if (!entry.intervention) {
              entry.intervention =
                  agents.intervention->generate_intervention(record, *entry.commonsense);
              entry.agent_fingerprints["intervention"] =
                  agents.intervention->endpoint().fingerprint();
              changed = true;
            }
          }
        }
        if (changed) {
          std::lock_guard<std::mutex> lock(store_mutex);
          store.put(std::move(entry));
        }
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(store_mutex);
        report.failures.emplace_back(record.id, e.what());
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  int requests_after = agents.caption->request_count() +
                       (agents.explanation ? agents.explanation->request_count() : 0) +
                       (agents.commonsense ? agents.commonsense->request_count() : 0) +
                       (agents.intervention ? agents.intervention->request_count() : 0);
  report.requests_made = requests_after - requests_before;
  // Failure order must not depend on thread interleaving.
  std::sort(report.failures.begin(), report.failures.end());
  return report;
}

}  // namespace memod
