#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memod/agents.hpp"

using namespace memod;

namespace {

MemeRecord make_record(const std::string& id, Label label) {
  MemeRecord r;
  r.id = id;
  r.image = "img/" + id + ".png";
  r.ocr_text = "ocr for " + id;
  r.gold_label = label;
  return r;
}

AgentEndpoint mock_endpoint(AgentKind kind) {
  AgentEndpoint ep;
  ep.kind = kind;
  ep.url = "mock://" + to_string(kind);
  ep.model_name = "mock";
  return ep;
}

DatasetManifest small_manifest() {
  DatasetManifest manifest;
  manifest.name = "pool";
  manifest.split = Split::train;
  manifest.label_vocabulary = {{"hateful", Label::positive}, {"non-hateful", Label::negative}};
  manifest.records = {make_record("r1", Label::positive), make_record("r2", Label::negative),
                      make_record("r3", Label::positive), make_record("r4", Label::negative)};
  return manifest;
}

AgentSet mock_agents(std::shared_ptr<MockChatBackend> backend) {
  AgentSet set;
  for (AgentKind kind : {AgentKind::caption, AgentKind::explanation, AgentKind::commonsense,
                         AgentKind::intervention}) {
    auto client = std::make_shared<AgentClient>(mock_endpoint(kind), backend);
    switch (kind) {
      case AgentKind::caption: set.caption = client; break;
      case AgentKind::explanation: set.explanation = client; break;
      case AgentKind::commonsense: set.commonsense = client; break;
      case AgentKind::intervention: set.intervention = client; break;
    }
  }
  return set;
}

}  // namespace

TEST_CASE("mock backend is deterministic") {
  MockChatBackend backend;
  ChatRequest request;
  request.model = "m";
  request.messages = nlohmann::ordered_json::array();
  std::string a = backend.complete(request);
  std::string b = backend.complete(request);
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}

TEST_CASE("caption generation caches by record") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentClient client(mock_endpoint(AgentKind::caption), backend);
  MemeRecord r = make_record("r1", Label::negative);
  std::string first = client.generate_caption(r);
  int after_first = backend->request_count();
  std::string second = client.generate_caption(r);
  CHECK(first == second);
  CHECK(backend->request_count() == after_first);
}

TEST_CASE("explanation is label-conditioned with distinct cache entries") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentClient client(mock_endpoint(AgentKind::explanation), backend);
  MemeRecord r = make_record("r1", Label::positive);
  std::string pos = client.generate_explanation(r, Label::positive, "hateful");
  std::string neg = client.generate_explanation(r, Label::negative, "non-hateful");
  CHECK(pos != neg);
  CHECK(backend->request_count() == 2);
}

TEST_CASE("intervention guard refuses negative records without a request") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentClient client(mock_endpoint(AgentKind::intervention), backend);
  MemeRecord r = make_record("r2", Label::negative);
  CHECK_THROWS_AS(client.generate_intervention(r, "some commonsense"), GuardViolation);
  CHECK(backend->request_count() == 0);
}

TEST_CASE("empty completion is an error") {
  class EmptyBackend : public ChatBackend {
   public:
    std::string complete(const ChatRequest&) override { return ""; }
    std::string fingerprint() const override { return "empty"; }
  };
  AgentClient client(mock_endpoint(AgentKind::caption), std::make_shared<EmptyBackend>());
  CHECK_THROWS_AS(client.generate_caption(make_record("r1", Label::negative)), EmptyCompletion);
}

TEST_CASE("run_with_retries retries retryable errors with backoff") {
  std::vector<std::chrono::milliseconds> naps;
  int calls = 0;
  std::string out = run_with_retries(
      [&]() -> std::string {
        if (++calls < 3) throw RetryableError("429");
        return "ok";
      },
      RetryPolicy{}, [&](std::chrono::milliseconds d) { naps.push_back(d); });
  CHECK(out == "ok");
  CHECK(calls == 3);
  REQUIRE(naps.size() == 2);
  CHECK(naps[0] == std::chrono::milliseconds(1000));
  CHECK(naps[1] == std::chrono::milliseconds(2000));
}

TEST_CASE("run_with_retries gives up after the attempt limit") {
  int calls = 0;
  CHECK_THROWS_AS(run_with_retries(
                      [&]() -> std::string {
                        ++calls;
                        throw RetryableError("503");
                      },
                      RetryPolicy{}, [](std::chrono::milliseconds) {}),
                  EndpointError);
  CHECK(calls == 3);
}

TEST_CASE("run_with_retries passes through non-retryable errors") {
  int calls = 0;
  CHECK_THROWS_AS(run_with_retries(
                      [&]() -> std::string {
                        ++calls;
                        throw EndpointError(404, "not found");
                      },
                      RetryPolicy{}, [](std::chrono::milliseconds) {}),
                  EndpointError);
  CHECK(calls == 1);
}

TEST_CASE("enrich_pool cardinality matches the guard") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentSet agents = mock_agents(backend);
  DatasetManifest manifest = small_manifest();
  SilverStore store;
  EnrichmentReport report = enrich_pool(manifest, agents, store);
  CHECK(report.ok());
  REQUIRE(store.size() == 4);
  int captions = 0, explanations = 0, interventions = 0;
  for (const auto& [id, e] : store.entries()) {
    captions += e.caption.has_value();
    explanations += e.explanation.has_value();
    interventions += e.intervention.has_value();
  }
  CHECK(captions == 4);
  CHECK(explanations == 4);
  CHECK(interventions == 2);
}

TEST_CASE("enrichment is idempotent on a complete store") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentSet agents = mock_agents(backend);
  DatasetManifest manifest = small_manifest();
  SilverStore store;
  enrich_pool(manifest, agents, store);

  auto fresh_backend = std::make_shared<MockChatBackend>();
  AgentSet fresh_agents = mock_agents(fresh_backend);
  EnrichmentReport report = enrich_pool(manifest, fresh_agents, store);
  CHECK(report.ok());
  CHECK(report.requests_made == 0);
  CHECK(fresh_backend->request_count() == 0);
}

TEST_CASE("captions_only skips gold-conditioned agents") {
  auto backend = std::make_shared<MockChatBackend>();
  AgentSet agents = mock_agents(backend);
  DatasetManifest manifest = small_manifest();
  SilverStore store;
  EnrichOptions options;
  options.captions_only = true;
  enrich_pool(manifest, agents, store, options);
  for (const auto& [id, e] : store.entries()) {
    CHECK(e.caption.has_value());
    CHECK_FALSE(e.explanation.has_value());
    CHECK_FALSE(e.intervention.has_value());
  }
}

TEST_CASE("partial failure keeps completed entries and reports the rest") {
  // Caption endpoint fails for exactly one record.
  class OneFailBackend : public ChatBackend {
   public:
    std::string complete(const ChatRequest& request) override {
      if (request.to_json().dump().find("r3") != std::string::npos)
        throw EndpointError(500, "boom");
      return inner_.complete(request);
    }
    std::string fingerprint() const override { return "one-fail"; }

   private:
    MockChatBackend inner_;
  };
  auto backend = std::make_shared<OneFailBackend>();
  AgentSet agents;
  agents.caption = std::make_shared<AgentClient>(mock_endpoint(AgentKind::caption), backend);
  agents.explanation =
      std::make_shared<AgentClient>(mock_endpoint(AgentKind::explanation), backend);
  agents.commonsense =
      std::make_shared<AgentClient>(mock_endpoint(AgentKind::commonsense), backend);
  agents.intervention =
      std::make_shared<AgentClient>(mock_endpoint(AgentKind::intervention), backend);

  DatasetManifest manifest = small_manifest();
  SilverStore store;
  EnrichmentReport report = enrich_pool(manifest, agents, store);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].first == "r3");
  CHECK(store.find("r1") != nullptr);
  CHECK(store.find("r2") != nullptr);
  CHECK(store.find("r4") != nullptr);
}

TEST_CASE("two mock enrichment runs produce byte-identical stores") {
  namespace fs = std::filesystem;
  auto run_once = [](const std::string& name) {
    auto backend = std::make_shared<MockChatBackend>();
    AgentSet agents = mock_agents(backend);
    DatasetManifest manifest = small_manifest();
    SilverStore store;
    enrich_pool(manifest, agents, store);
    fs::path path = fs::temp_directory_path() / name;
    save_silver(store, path.string());
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    fs::remove(path);
    return buffer.str();
  };
  CHECK(run_once("memod_enrich_a.jsonl") == run_once("memod_enrich_b.jsonl"));
}

TEST_CASE("mock model backend emits parseable completions") {
  MockModelBackend backend(LabelTokens{});
  ChatRequest request;
  request.model = "mock";
  request.messages = nlohmann::ordered_json::array();
  request.messages.push_back({{"role", "user"}, {"content", "hello"}});
  std::string completion = backend.complete(request);
  bool positive = completion.rfind("hateful", 0) == 0;
  bool negative = completion.rfind("non-hateful", 0) == 0;
  CHECK((positive || negative));
  CHECK(completion == backend.complete(request));
}

TEST_CASE("agent templates load overrides from a directory") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "memod_templates";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "caption.txt");
    out << "Describe {ocr_text} briefly.";
  }
  AgentTemplates templates = AgentTemplates::load_dir(dir.string());
  CHECK(templates.caption == "Describe {ocr_text} briefly.");
  CHECK(templates.explanation == AgentTemplates::defaults().explanation);
  fs::remove_all(dir);
}
