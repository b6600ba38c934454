#include "memod/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "memod/retriever.hpp"
#include "memod/svg.hpp"
#include "memod/text.hpp"
#include "memod/textlab.hpp"

namespace memod {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

const char* kDefaultPositiveDefinition =
    "a meme that attacks, demeans or dehumanizes a person or group on the basis of protected "
    "characteristics such as religion, ethnicity, gender, sexual orientation, disability or "
    "nationality";
const char* kDefaultNegativeDefinition =
    "a meme that does not attack or demean any person or group; it may be humorous, neutral or "
    "benign even when provocative in style";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buffer;
}

// Replay metadata; the one artifact allowed to differ between reruns.
void write_run_manifest(const RunConfig& config, const std::string& command,
                        const std::map<std::string, std::string>& fingerprints) {
  ordered_json obj;
  obj["command"] = command;
  obj["config_digest"] = config.config_digest();
  obj["timestamp"] = iso_timestamp();
  ordered_json fps = ordered_json::object();
  for (const auto& [k, v] : fingerprints) fps[k] = v;
  obj["fingerprints"] = fps;
  write_file(config.run_dir() + "run_manifest_" + command + ".json", obj.dump(2) + "\n");
}

std::string silver_train_path(const RunConfig& config) {
  return config.dataset_dir() + "silver_train.jsonl";
}
std::string silver_test_path(const RunConfig& config) {
  return config.dataset_dir() + "silver_test.jsonl";
}
std::string index_path(const RunConfig& config) { return config.dataset_dir() + "index.jsonl"; }

EndpointSpec parse_endpoint(const ordered_json& obj) {
  EndpointSpec spec;
  spec.url = obj.value("url", "");
  spec.model = obj.value("model", "");
  spec.auth_env = obj.value("auth_env", "");
  return spec;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }

  RunConfig config;
  try {
    const auto& dataset = obj.at("dataset");
    config.dataset_name = dataset.at("name").get<std::string>();
    config.train_manifest = dataset.value("train_manifest", "");
    config.test_manifest = dataset.value("test_manifest", "");

    if (obj.contains("embedding")) {
      const auto& e = obj["embedding"];
      config.embedding.backend = e.value("backend", "mock");
      config.embedding.dim = e.value("dim", std::size_t{16});
      config.embedding.path = e.value("path", "");
      config.embedding.url = e.value("url", "");
      config.embedding.model = e.value("model", "");
      config.embedding.auth_env = e.value("auth_env", "");
    }
    if (obj.contains("agents")) {
      for (const auto& [kind, spec] : obj["agents"].items())
        config.agent_endpoints[kind] = parse_endpoint(spec);
    }
    if (obj.contains("model")) {
      config.model_backend = obj["model"].value("backend", "mock");
      config.model = parse_endpoint(obj["model"]);
    }
    if (obj.contains("inference")) {
      const auto& inf = obj["inference"];
      config.n_shots = inf.value("shots", 2);
      config.temperature = inf.value("temperature", 0.001);
      config.max_new_tokens = inf.value("max_new_tokens", 100);
      config.in_flight = inf.value("in_flight", 4);
      config.shot_order = inf.value("shot_order", "similarity_desc");
      config.balanced_shots = inf.value("balanced_shots", false);
      config.dump_transcripts = inf.value("dump_transcripts", false);
    }
    if (obj.contains("labels")) {
      const auto& labels = obj["labels"];
      config.labels.positive = labels.value("positive", "hateful");
      config.labels.negative = labels.value("negative", "non-hateful");
      config.positive_definition = labels.value("positive_definition", "");
      config.negative_definition = labels.value("negative_definition", "");
    }
    if (obj.contains("analysis"))
      config.sentiment_lexicon = obj["analysis"].value("sentiment_lexicon", "");
    if (obj.contains("templates_dir")) config.templates_dir = obj["templates_dir"];
    if (obj.contains("output")) config.out_dir = obj["output"].value("dir", "out");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }

  if (config.positive_definition.empty()) config.positive_definition = kDefaultPositiveDefinition;
  if (config.negative_definition.empty()) config.negative_definition = kDefaultNegativeDefinition;
  if (config.n_shots < 1) throw ConfigError("inference.shots must be >= 1");
  if (config.temperature < 0) throw ConfigError("inference.temperature must be >= 0");
  return config;
}

std::string RunConfig::model_label() const {
  if (mock || model_backend == "mock") return "mock";
  return model.model.empty() ? "model" : model.model;
}

std::string RunConfig::dataset_dir() const { return out_dir + "/" + dataset_name + "/"; }

std::string RunConfig::run_dir() const {
  return dataset_dir() + model_label() + "/" + std::to_string(n_shots) + "/";
}

std::string RunConfig::config_digest() const {
  std::ostringstream key;
  key << dataset_name << "|" << train_manifest << "|" << test_manifest << "|"
      << embedding.backend << "|" << embedding.dim << "|" << model_backend << "|" << model.model
      << "|" << n_shots << "|" << temperature << "|" << max_new_tokens << "|" << shot_order
      << "|" << balanced_shots << "|" << labels.positive << "|" << labels.negative << "|"
      << mock;
  std::ostringstream hex;
  hex << std::hex << fnv1a64(key.str());
  return hex.str();
}

std::shared_ptr<EmbeddingBackend> make_embedding_backend(const RunConfig& config) {
  if (config.mock || config.embedding.backend == "mock")
    return std::make_shared<MockEmbeddingBackend>(config.embedding.dim);
  if (config.embedding.backend == "precomputed") {
    if (config.embedding.path.empty())
      throw ConfigError("embedding.path required for the precomputed backend");
    return std::make_shared<PrecomputedEmbeddingBackend>(config.embedding.path);
  }
  if (config.embedding.backend == "remote") {
    if (config.embedding.url.empty())
      throw ConfigError("embedding.url required for the remote backend");
    return std::make_shared<RemoteEmbeddingBackend>(RemoteEmbeddingConfig{
        config.embedding.url, config.embedding.model, config.embedding.auth_env});
  }
  throw ConfigError("unknown embedding backend: " + config.embedding.backend);
}

std::shared_ptr<ChatBackend> make_model_backend(const RunConfig& config) {
  if (config.mock || config.model_backend == "mock")
    return std::make_shared<MockModelBackend>(config.labels);
  if (config.model_backend == "remote") {
    if (config.model.url.empty()) throw ConfigError("model.url required for the remote backend");
    return std::make_shared<HttpChatBackend>(config.model.url, config.model.auth_env);
  }
  throw ConfigError("unknown model backend: " + config.model_backend);
}

AgentSet make_agent_set(const RunConfig& config) {
  AgentTemplates templates = config.templates_dir.empty()
                                 ? AgentTemplates::defaults()
                                 : AgentTemplates::load_dir(config.templates_dir);

  auto make = [&](AgentKind kind) -> std::shared_ptr<AgentClient> {
    std::string name = to_string(kind);
    if (config.mock) {
      AgentEndpoint ep;
      ep.kind = kind;
      ep.url = "mock://" + name;
      ep.model_name = "mock";
      ep.temperature = config.temperature;
      ep.max_new_tokens = config.max_new_tokens;
      return std::make_shared<AgentClient>(ep, std::make_shared<MockChatBackend>(), templates);
    }
    auto it = config.agent_endpoints.find(name);
    if (it == config.agent_endpoints.end()) return nullptr;
    AgentEndpoint ep;
    ep.kind = kind;
    ep.url = it->second.url;
    ep.model_name = it->second.model;
    ep.auth_env = it->second.auth_env;
    ep.temperature = config.temperature;
    ep.max_new_tokens = config.max_new_tokens;
    return std::make_shared<AgentClient>(
        ep, std::make_shared<HttpChatBackend>(ep.url, ep.auth_env), templates);
  };

  AgentSet set;
  set.caption = make(AgentKind::caption);
  set.explanation = make(AgentKind::explanation);
  set.commonsense = make(AgentKind::commonsense);
  set.intervention = make(AgentKind::intervention);
  return set;
}

namespace {

SilverStore load_silver_if_present(const std::string& path, const DatasetManifest& manifest) {
  if (!fs::exists(path)) return {};
  std::vector<std::string> orphans;
  SilverStore store = load_silver(path, &manifest, &orphans);
  for (const auto& id : orphans)
    std::cerr << "warning: silver entry for unknown record " << id << " ignored (orphan)\n";
  return store;
}

}  // namespace

int cmd_enrich(const RunConfig& config) {
  if (config.train_manifest.empty() || config.test_manifest.empty()) {
    std::cerr << "error: dataset.train_manifest and dataset.test_manifest are required\n";
    return kExitConfigError;
  }
  if (!config.mock && config.agent_endpoints.empty()) {
    std::cerr << "error: no agent endpoints configured (or use --mock)\n";
    return kExitConfigError;
  }

  DatasetManifest train = load_manifest(config.train_manifest);
  DatasetManifest test = load_manifest(config.test_manifest);
  AgentSet agents = make_agent_set(config);

  SilverStore train_store = load_silver_if_present(silver_train_path(config), train);
  SilverStore test_store = load_silver_if_present(silver_test_path(config), test);

  EnrichOptions train_options;
  train_options.in_flight = config.in_flight;
  EnrichmentReport train_report = enrich_pool(train, agents, train_store, train_options);

  // Test records only ever need captions: the test turn is never
  // gold-conditioned.
  EnrichOptions test_options;
  test_options.captions_only = true;
  test_options.in_flight = config.in_flight;
  EnrichmentReport test_report = enrich_pool(test, agents, test_store, test_options);

  fs::create_directories(config.dataset_dir());
  save_silver(train_store, silver_train_path(config));
  save_silver(test_store, silver_test_path(config));

  std::map<std::string, std::string> fingerprints;
  if (agents.caption) fingerprints["caption"] = agents.caption->endpoint().fingerprint();
  if (agents.explanation)
    fingerprints["explanation"] = agents.explanation->endpoint().fingerprint();
  write_run_manifest(config, "enrich", fingerprints);

  int requests = train_report.requests_made + test_report.requests_made;
  std::cout << "enrich: " << train_store.size() << " train + " << test_store.size()
            << " test entries, " << requests << " endpoint requests\n";
  if (!train_report.ok() || !test_report.ok()) {
    std::cerr << "enrich: partial failure:\n";
    for (const auto& [id, err] : train_report.failures)
      std::cerr << "  train " << id << ": " << err << "\n";
    for (const auto& [id, err] : test_report.failures)
      std::cerr << "  test " << id << ": " << err << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

int cmd_index(const RunConfig& config) {
  DatasetManifest train = load_manifest(config.train_manifest);
  if (!fs::exists(silver_train_path(config))) {
    std::cerr << "error: no train silver store; run enrich first\n";
    return kExitDataError;
  }
  SilverStore store = load_silver(silver_train_path(config), &train);
  EnrichedPool pool = attach_silver(train, store);
  auto backend = make_embedding_backend(config);
  EmbeddingIndex index = build_index(pool, *backend);
  index.save(index_path(config));
  write_run_manifest(config, "index", {{"embedding", backend->fingerprint()}});
  std::cout << "index: " << index.size() << " vectors, dim " << index.dim() << "\n";
  return kExitOk;
}

int cmd_run(const RunConfig& config) {
  DatasetManifest train = load_manifest(config.train_manifest);
  DatasetManifest test = load_manifest(config.test_manifest);
  if (!fs::exists(index_path(config)) || !fs::exists(silver_train_path(config)) ||
      !fs::exists(silver_test_path(config))) {
    std::cerr << "error: enrichment or index missing; run enrich and index first\n";
    return kExitDataError;
  }
  SilverStore train_store = load_silver(silver_train_path(config), &train);
  SilverStore test_store = load_silver(silver_test_path(config), &test);
  EnrichedPool pool = attach_silver(train, train_store);
  EmbeddingIndex index = EmbeddingIndex::load(index_path(config));

  auto embed_backend = make_embedding_backend(config);
  auto model_backend = make_model_backend(config);

  ChatTurn system_turn = build_system_prompt(config.positive_definition,
                                             config.negative_definition, config.labels);

  std::map<std::string, Label> pool_labels;
  for (const auto& [record, silver] : pool) pool_labels[record.id] = record.gold_label;
  RetrieverOptions retriever_options;
  retriever_options.balanced_shots = config.balanced_shots;
  retriever_options.labels = &pool_labels;

  std::vector<ParsedPrediction> predictions(test.records.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> succeeded{0};
  std::mutex io_mutex;

  auto work = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= test.records.size()) break;
      const MemeRecord& record = test.records[i];
      ParsedPrediction prediction;
      prediction.record_id = record.id;
      try {
        const SilverEnrichment* silver = test_store.find(record.id);
        if (silver == nullptr || !silver->caption)
          throw MissingCaption("record " + record.id + " has no silver caption");

        EmbeddingVector query = embed_backend->embed({record.id, similarity_text(record, *silver)});
        ExemplarSet shots =
            select_exemplars(query, record.id, index,
                             std::min<int>(config.n_shots, static_cast<int>(index.size())),
                             retriever_options);
        if (config.shot_order == "similarity_asc")
          std::reverse(shots.shots.begin(), shots.shots.end());

        PromptBundle bundle;
        bundle.system = system_turn;
        bundle.shot_turns = build_shot_turns(shots, pool, config.labels);
        bundle.test_turn = build_test_turn(record, *silver->caption);
        bundle.temperature = config.temperature;
        bundle.max_new_tokens = config.max_new_tokens;

        ChatRequest request;
        request.model = config.model_label();
        request.messages = to_messages(bundle);
        request.temperature = bundle.temperature;
        request.max_tokens = bundle.max_new_tokens;

        if (config.dump_transcripts) {
          std::lock_guard<std::mutex> lock(io_mutex);
          write_file(config.run_dir() + "transcripts/" + record.id + ".prompt.txt",
                     render_transcript(bundle));
        }

        std::string completion = model_backend->complete(request);
        prediction = parse_response(completion, config.labels, test.label_vocabulary);
        prediction.record_id = record.id;
        succeeded.fetch_add(1);
      } catch (const Error& e) {
        prediction.predicted_label = PredictedLabel::unparseable;
        prediction.raw = std::string("[error] ") + e.what();
      }
      predictions[i] = std::move(prediction);
    }
  };

  int workers = std::max(1, std::min<int>(config.in_flight,
                                          static_cast<int>(test.records.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  fs::create_directories(config.run_dir());
  save_predictions(predictions, config.run_dir() + "predictions.jsonl");
  write_run_manifest(config, "run",
                     {{"embedding", embed_backend->fingerprint()},
                      {"model", model_backend->fingerprint()},
                      {"index", index.backend_fingerprint()}});

  std::cout << "run: " << predictions.size() << " predictions, " << succeeded.load()
            << " completed\n";
  if (succeeded.load() == 0 && !test.records.empty()) {
    std::cerr << "error: every record failed; model backend unreachable?\n";
    return kExitBackendFailure;
  }
  return kExitOk;
}

namespace {

int run_agent_eval(const RunConfig& config, const EvaluateOptions& options) {
  std::string store_path =
      options.store_path.empty() ? silver_train_path(config) : options.store_path;
  if (options.references_path.empty()) {
    std::cerr << "error: agent evaluation needs --references\n";
    return kExitConfigError;
  }
  SilverStore outputs = load_silver(store_path);
  SilverStore references = load_silver(options.references_path);

  auto embed_backend = make_embedding_backend(config);
  MockTokenEmbeddingBackend token_backend(config.embedding.dim);

  struct Row {
    std::string agent;
    int samples = 0;
    double rgl = 0, ss = 0, bsf1 = 0;
  };
  std::vector<Row> rows;
  auto field = [](const SilverEnrichment& e, const std::string& kind)
      -> const std::optional<std::string>& {
    if (kind == "caption") return e.caption;
    if (kind == "explanation") return e.explanation;
    if (kind == "commonsense") return e.commonsense;
    return e.intervention;
  };

  for (const std::string& kind : {"caption", "explanation", "commonsense", "intervention"}) {
    Row row;
    row.agent = kind;
    for (const auto& [id, output] : outputs.entries()) {
      const SilverEnrichment* reference = references.find(id);
      if (reference == nullptr) continue;
      const auto& out_field = field(output, kind);
      const auto& ref_field = field(*reference, kind);
      if (!out_field || !ref_field || out_field->empty() || ref_field->empty()) continue;
      row.rgl += rouge_l(*out_field, *ref_field);
      row.ss += semantic_similarity(*out_field, *ref_field, *embed_backend);
      row.bsf1 += bertscore_f1(*out_field, *ref_field, token_backend);
      ++row.samples;
    }
    if (row.samples > 0) {
      row.rgl /= row.samples;
      row.ss /= row.samples;
      row.bsf1 /= row.samples;
    }
    rows.push_back(row);
  }

  ordered_json doc = ordered_json::array();
  std::ostringstream csv;
  csv << "agent,samples,rgL,ss,bsf1\n";
  for (const auto& row : rows) {
    ordered_json obj;
    obj["agent"] = row.agent;
    obj["samples"] = row.samples;
    obj["rouge_l"] = row.rgl;
    obj["semantic_similarity"] = row.ss;
    obj["bertscore_f1"] = row.bsf1;
    doc.push_back(obj);
    csv << row.agent << "," << row.samples << "," << std::fixed << std::setprecision(6)
        << row.rgl << "," << row.ss << "," << row.bsf1 << "\n";
  }
  write_file(config.run_dir() + "agent_eval.json", doc.dump(2) + "\n");
  write_file(config.run_dir() + "agent_eval.csv", csv.str());
  std::cout << "agent-eval: " << rows.size() << " agent rows written\n";
  return kExitOk;
}

}  // namespace

int cmd_evaluate(const RunConfig& config, const EvaluateOptions& options) {
  if (options.agent_eval) return run_agent_eval(config, options);

  DatasetManifest test = load_manifest(config.test_manifest);
  std::string predictions_path = options.predictions_path.empty()
                                     ? config.run_dir() + "predictions.jsonl"
                                     : options.predictions_path;
  std::vector<ParsedPrediction> predictions = load_predictions(predictions_path);

  auto embed_backend = make_embedding_backend(config);
  MockTokenEmbeddingBackend token_backend(config.embedding.dim);

  ReportConfig report_config;
  report_config.n_shots = config.n_shots;
  report_config.retriever_fingerprint = embed_backend->fingerprint();
  report_config.model_fingerprint = config.model_label();

  EvalReport report;
  try {
    report = build_report(predictions, test, *embed_backend, token_backend, report_config);
  } catch (const CoverageMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }

  write_file(config.run_dir() + "report.json", report_to_json(report) + "\n");
  write_file(config.run_dir() + "report.csv", report_to_csv(report));
  write_run_manifest(config, "evaluate", {{"retriever", report.retriever_fingerprint},
                                          {"model", report.model_fingerprint}});
  std::cout << "evaluate: acc " << report.classification.accuracy << ", macro-F1 "
            << report.classification.macro_f1 << ", support " << report.support << "\n";
  return kExitOk;
}

namespace {

ordered_json stat_entry(const std::vector<double>& values) {
  ordered_json obj;
  obj["count"] = values.size();
  if (values.empty()) {
    obj["mean"] = nullptr;
    obj["ci_half_width"] = nullptr;
    return obj;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  obj["mean"] = mean;
  if (values.size() < 2) {
    obj["ci_half_width"] = nullptr;  // InsufficientData
  } else {
    obj["ci_half_width"] = confidence_interval(values).half_width;
  }
  return obj;
}

ordered_json sentiment_entry(const std::string& group, const std::vector<std::string>& texts,
                             const ValenceLexicon& lexicon) {
  SentimentDistribution dist = sentiment_distribution(texts, lexicon);
  ordered_json obj;
  obj["group"] = group;
  obj["texts"] = texts.size();
  obj["positive_pct"] = dist.positive_pct;
  obj["neutral_pct"] = dist.neutral_pct;
  obj["negative_pct"] = dist.negative_pct;
  return obj;
}

ordered_json word_shift_entry(const std::string& name, const WordShiftResult& shift) {
  ordered_json obj;
  obj["name"] = name;
  obj["total_shift"] = shift.total_shift;
  ordered_json contributions = ordered_json::array();
  for (const auto& c : shift.contributions) {
    ordered_json row;
    row["word"] = c.word;
    row["delta"] = c.delta;
    row["cumulative"] = c.cumulative;
    contributions.push_back(row);
  }
  obj["contributions"] = contributions;
  return obj;
}

}  // namespace

int cmd_analyze(const RunConfig& config, const AnalyzeOptions& options) {
  DatasetManifest test = load_manifest(config.test_manifest);
  std::string predictions_path = options.predictions_path.empty()
                                     ? config.run_dir() + "predictions.jsonl"
                                     : options.predictions_path;
  std::vector<ParsedPrediction> predictions = load_predictions(predictions_path);

  std::map<std::string, const ParsedPrediction*> by_id;
  for (const auto& p : predictions) by_id[p.record_id] = &p;

  // Partition into subgroups; unparseable records tallied separately.
  std::map<Subgroup, std::vector<const ParsedPrediction*>> groups;
  int unparseable = 0;
  for (const auto& record : test.records) {
    auto it = by_id.find(record.id);
    if (it == by_id.end()) {
      std::cerr << "error: no prediction for record " << record.id << "\n";
      return kExitDataError;
    }
    const ParsedPrediction* pred = it->second;
    if (pred->predicted_label == PredictedLabel::unparseable) {
      ++unparseable;
      continue;
    }
    groups[subgroup_of(pred->predicted_label, record.gold_label)].push_back(pred);
  }

  ValenceLexicon lexicon;
  if (!config.sentiment_lexicon.empty()) lexicon = load_valence_lexicon(config.sentiment_lexicon);

  // Perplexity reference corpora: pooled generated texts per task.
  std::vector<std::string> explanation_corpus, intervention_corpus;
  for (const auto& p : predictions) {
    if (p.predicted_label == PredictedLabel::unparseable) continue;
    if (!p.explanation.empty()) explanation_corpus.push_back(p.explanation);
    if (p.intervention && !p.intervention->empty())
      intervention_corpus.push_back(*p.intervention);
  }
  std::optional<UnigramModel> explanation_model, intervention_model;
  if (!explanation_corpus.empty()) explanation_model.emplace(explanation_corpus);
  if (!intervention_corpus.empty()) intervention_model.emplace(intervention_corpus);

  ordered_json doc;
  doc["dataset"] = config.dataset_name;
  doc["model"] = config.model_label();
  doc["n_shots"] = config.n_shots;
  doc["unparseable_count"] = unparseable;

  ordered_json counts = ordered_json::object();
  for (Subgroup sg : {Subgroup::cp, Subgroup::cn, Subgroup::wp, Subgroup::wn})
    counts[to_string(sg)] = groups[sg].size();
  doc["subgroup_counts"] = counts;

  ordered_json stats = ordered_json::array();
  std::ostringstream stats_csv;
  stats_csv << "subgroup,task,measure,count,mean,ci_half_width\n";
  auto emit_stats = [&](Subgroup sg, const std::string& task,
                        const std::vector<std::string>& texts,
                        const std::optional<UnigramModel>& model) {
    std::vector<double> token_counts, ttrs, perplexities;
    for (const auto& text : texts) {
      TextStats ts = text_stats(text);
      token_counts.push_back(ts.token_count);
      if (ts.ttr) ttrs.push_back(*ts.ttr);
      if (model && ts.token_count > 0) perplexities.push_back(model->perplexity(text));
    }
    ordered_json entry;
    entry["subgroup"] = to_string(sg);
    entry["task"] = task;
    entry["count"] = texts.size();
    entry["token_count"] = stat_entry(token_counts);
    entry["ttr"] = stat_entry(ttrs);
    entry["perplexity"] = stat_entry(perplexities);
    stats.push_back(entry);
    for (const auto& [measure, values] :
         {std::pair<std::string, const std::vector<double>*>{"token_count", &token_counts},
          {"ttr", &ttrs},
          {"perplexity", &perplexities}}) {
      stats_csv << to_string(sg) << "," << task << "," << measure << "," << values->size()
                << ",";
      if (values->empty()) {
        stats_csv << ",\n";
      } else {
        double mean = 0.0;
        for (double v : *values) mean += v;
        mean /= static_cast<double>(values->size());
        stats_csv << std::fixed << std::setprecision(6) << mean << ",";
        if (values->size() < 2) {
          stats_csv << "\n";
        } else {
          stats_csv << confidence_interval(*values).half_width << "\n";
        }
      }
    }
  };

  for (Subgroup sg : {Subgroup::cp, Subgroup::cn, Subgroup::wp, Subgroup::wn}) {
    std::vector<std::string> explanations;
    for (const auto* p : groups[sg])
      if (!p->explanation.empty()) explanations.push_back(p->explanation);
    emit_stats(sg, "explanation", explanations, explanation_model);
    if (sg == Subgroup::cp || sg == Subgroup::wp) {
      std::vector<std::string> interventions;
      for (const auto* p : groups[sg])
        if (p->intervention && !p->intervention->empty())
          interventions.push_back(*p->intervention);
      emit_stats(sg, "intervention", interventions, intervention_model);
    }
  }
  doc["stats"] = stats;

  ordered_json sentiment = ordered_json::array();
  std::ostringstream sentiment_csv;
  sentiment_csv << "group,texts,positive_pct,neutral_pct,negative_pct\n";
  auto emit_sentiment = [&](const std::string& group, const std::vector<std::string>& texts) {
    ordered_json entry = sentiment_entry(group, texts, lexicon);
    sentiment.push_back(entry);
    sentiment_csv << group << "," << texts.size() << "," << std::fixed << std::setprecision(6)
                  << entry["positive_pct"].get<double>() << ","
                  << entry["neutral_pct"].get<double>() << ","
                  << entry["negative_pct"].get<double>() << "\n";
  };
  for (Subgroup sg : {Subgroup::cp, Subgroup::cn, Subgroup::wp, Subgroup::wn}) {
    std::vector<std::string> explanations;
    for (const auto* p : groups[sg])
      if (!p->explanation.empty()) explanations.push_back(p->explanation);
    emit_sentiment(to_string(sg) + "-ex", explanations);
  }
  for (Subgroup sg : {Subgroup::cp, Subgroup::wp}) {
    std::vector<std::string> interventions;
    for (const auto* p : groups[sg])
      if (p->intervention && !p->intervention->empty())
        interventions.push_back(*p->intervention);
    emit_sentiment(to_string(sg) + "-in", interventions);
  }
  doc["sentiment"] = sentiment;

  auto embed_backend = make_embedding_backend(config);
  CoherenceResult coh = coherence(predictions, test, *embed_backend);
  ordered_json coherence_obj;
  std::ostringstream coherence_csv;
  coherence_csv << "subgroup,count,mean\n";
  auto coherence_entry = [&](const std::string& name, const SubgroupCoherence& sc) {
    ordered_json entry;
    entry["count"] = sc.count;
    entry["mean"] = sc.mean ? ordered_json(*sc.mean) : ordered_json(nullptr);
    coherence_obj[name] = entry;
    coherence_csv << name << "," << sc.count << ",";
    if (sc.mean) coherence_csv << std::fixed << std::setprecision(6) << *sc.mean;
    coherence_csv << "\n";
  };
  coherence_entry("cp", coh.cp);
  coherence_entry("wp", coh.wp);
  doc["coherence"] = coherence_obj;

  ordered_json shifts = ordered_json::array();
  std::ostringstream shift_csv;
  shift_csv << "comparison,word,delta,cumulative\n";
  auto emit_shift = [&](const std::string& name, const std::vector<std::string>& a,
                        const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return;
    WordShiftResult shift = word_shift(a, b);
    shifts.push_back(word_shift_entry(name, shift));
    for (const auto& c : shift.contributions)
      shift_csv << name << "," << c.word << "," << std::fixed << std::setprecision(9) << c.delta
                << "," << c.cumulative << "\n";
  };
  {
    std::vector<std::string> pos_explanations, neg_explanations;
    for (Subgroup sg : {Subgroup::cp, Subgroup::wp})
      for (const auto* p : groups[sg])
        if (!p->explanation.empty()) pos_explanations.push_back(p->explanation);
    for (Subgroup sg : {Subgroup::cn, Subgroup::wn})
      for (const auto* p : groups[sg])
        if (!p->explanation.empty()) neg_explanations.push_back(p->explanation);
    emit_shift("explanation_pos_vs_neg", pos_explanations, neg_explanations);
  }
  if (!options.compare_predictions_path.empty()) {
    std::vector<ParsedPrediction> other = load_predictions(options.compare_predictions_path);
    std::vector<std::string> ours, theirs;
    for (const auto& p : predictions)
      if (p.intervention && !p.intervention->empty()) ours.push_back(*p.intervention);
    for (const auto& p : other)
      if (p.intervention && !p.intervention->empty()) theirs.push_back(*p.intervention);
    std::string name = "intervention_vs_" + (options.compare_model_label.empty()
                                                 ? std::string("other")
                                                 : options.compare_model_label);
    emit_shift(name, ours, theirs);
  }
  doc["word_shift"] = shifts;

  write_file(config.run_dir() + "analysis.json", doc.dump(2) + "\n");
  write_file(config.run_dir() + "analysis_textstats.csv", stats_csv.str());
  write_file(config.run_dir() + "analysis_sentiment.csv", sentiment_csv.str());
  write_file(config.run_dir() + "analysis_coherence.csv", coherence_csv.str());
  write_file(config.run_dir() + "analysis_wordshift.csv", shift_csv.str());
  write_run_manifest(config, "analyze", {});
  std::cout << "analyze: " << groups[Subgroup::cp].size() << "/" << groups[Subgroup::cn].size()
            << "/" << groups[Subgroup::wp].size() << "/" << groups[Subgroup::wn].size()
            << " cp/cn/wp/wn, " << unparseable << " unparseable\n";
  return kExitOk;
}

namespace {

struct PointStat {
  std::string label;
  double mean = 0.0;
  double half_width = 0.0;
  bool present = false;
};

void plot_points(SvgCanvas& canvas, const std::vector<PointStat>& points, double x0, double y0,
                 double width, double height, const std::string& title) {
  canvas.text(x0 + width / 2, y0 - 8, title, 12, "middle");
  canvas.line(x0, y0, x0, y0 + height, "#333");
  canvas.line(x0, y0 + height, x0 + width, y0 + height, "#333");

  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const auto& p : points) {
    if (!p.present) continue;
    double a = p.mean - p.half_width, b = p.mean + p.half_width;
    if (!any) {
      lo = a;
      hi = b;
      any = true;
    } else {
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
  }
  if (!any) return;
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto ty = [&](double v) { return y0 + height - (v - lo) / (hi - lo) * height; };
  double step = width / (static_cast<double>(points.size()) + 1.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    double x = x0 + step * (static_cast<double>(i) + 1.0);
    canvas.text(x, y0 + height + 14, p.label, 10, "middle");
    if (!p.present) continue;
    if (p.half_width > 0) {
      canvas.line(x, ty(p.mean - p.half_width), x, ty(p.mean + p.half_width), "#888");
      canvas.line(x - 4, ty(p.mean - p.half_width), x + 4, ty(p.mean - p.half_width), "#888");
      canvas.line(x - 4, ty(p.mean + p.half_width), x + 4, ty(p.mean + p.half_width), "#888");
    }
    canvas.circle(x, ty(p.mean), 3.5, "#1f6fb2");
  }
  canvas.text(x0 - 4, ty(lo + pad) + 4, svg_num(lo + pad), 9, "end");
  canvas.text(x0 - 4, ty(hi - pad) + 4, svg_num(hi - pad), 9, "end");
}

}  // namespace

int cmd_plot(const RunConfig& config) {
  std::string analysis_path = config.run_dir() + "analysis.json";
  if (!fs::exists(analysis_path)) {
    std::cerr << "error: " << analysis_path << " missing; run analyze first\n";
    return kExitDataError;
  }
  ordered_json doc = ordered_json::parse(read_file(analysis_path));
  std::string fig_dir = config.run_dir() + "figures/";
  fs::create_directories(fig_dir);

  // Text statistics: one panel per measure, a point with error bar per
  // subgroup/task pair.
  {
    const std::vector<std::string> measures = {"token_count", "ttr", "perplexity"};
    std::map<std::string, std::vector<PointStat>> panels;
    std::ostringstream csv;
    csv << "subgroup,task,measure,count,mean,ci_half_width\n";
    for (const auto& entry : doc["stats"]) {
      std::string subgroup = entry["subgroup"];
      std::string task = entry["task"];
      for (const auto& measure : measures) {
        const auto& stat = entry[measure];
        PointStat p;
        p.label = subgroup + "/" + task.substr(0, 2);
        if (!stat["mean"].is_null()) {
          p.present = true;
          p.mean = stat["mean"].get<double>();
          if (!stat["ci_half_width"].is_null()) p.half_width = stat["ci_half_width"].get<double>();
        }
        panels[measure].push_back(p);
        csv << subgroup << "," << task << "," << measure << "," << stat["count"].dump() << ",";
        if (p.present) csv << std::fixed << std::setprecision(6) << p.mean;
        csv << ",";
        if (p.present && !stat["ci_half_width"].is_null())
          csv << std::fixed << std::setprecision(6) << p.half_width;
        csv << "\n";
      }
    }
    SvgCanvas canvas(3 * 280 + 40, 280);
    for (std::size_t i = 0; i < measures.size(); ++i)
      plot_points(canvas, panels[measures[i]], 60 + static_cast<double>(i) * 280, 40, 220, 190,
                  measures[i]);
    write_file(fig_dir + "fig_textstats.svg", canvas.finish());
    write_file(fig_dir + "fig_textstats.csv", csv.str());
  }

  // Caption/explanation coherence for positive predictions.
  {
    SvgCanvas canvas(320, 260);
    std::ostringstream csv;
    csv << "subgroup,count,mean\n";
    canvas.text(160, 24, "caption-explanation coherence", 12, "middle");
    canvas.line(60, 40, 60, 220, "#333");
    canvas.line(60, 220, 280, 220, "#333");
    double x = 110;
    for (const std::string& name : {"cp", "wp"}) {
      const auto& entry = doc["coherence"][name];
      csv << name << "," << entry["count"].dump() << ",";
      if (!entry["mean"].is_null()) {
        double mean = entry["mean"].get<double>();
        csv << std::fixed << std::setprecision(6) << mean;
        double h = std::clamp(mean, 0.0, 1.0) * 180.0;
        canvas.rect(x - 25, 220 - h, 50, h, name == "cp" ? "#1f6fb2" : "#c0504d");
        canvas.text(x, 214 - h, svg_num(mean), 10, "middle");
      }
      csv << "\n";
      canvas.text(x, 236, name, 11, "middle");
      x += 100;
    }
    write_file(fig_dir + "fig_coherence.svg", canvas.finish());
    write_file(fig_dir + "fig_coherence.csv", csv.str());
  }

  // Sentiment distribution: one stacked bar per text group.
  {
    const auto& groups = doc["sentiment"];
    SvgCanvas canvas(80.0 + 70.0 * groups.size(), 300);
    std::ostringstream csv;
    csv << "group,texts,positive_pct,neutral_pct,negative_pct\n";
    canvas.text((80.0 + 70.0 * groups.size()) / 2, 24, "sentiment distribution", 12, "middle");
    double x = 80;
    for (const auto& entry : groups) {
      std::string name = entry["group"];
      double pos = entry["positive_pct"].get<double>();
      double neu = entry["neutral_pct"].get<double>();
      double neg = entry["negative_pct"].get<double>();
      csv << name << "," << entry["texts"].dump() << "," << std::fixed << std::setprecision(6)
          << pos << "," << neu << "," << neg << "\n";
      double y = 240;
      for (const auto& [pct, fill] :
           {std::pair<double, const char*>{neg, "#c0504d"}, {neu, "#bbbbbb"}, {pos, "#4f9d55"}}) {
        double h = pct / 100.0 * 190.0;
        if (h > 0) canvas.rect(x - 22, y - h, 44, h, fill);
        y -= h;
      }
      canvas.text(x, 258, name, 10, "middle");
      x += 70;
    }
    write_file(fig_dir + "fig_sentiment.svg", canvas.finish());
    write_file(fig_dir + "fig_sentiment.csv", csv.str());
  }

  // Word shift: ranked horizontal bars for the first comparison.
  {
    SvgCanvas canvas(560, 60.0 + 16.0 * 30.0);
    std::ostringstream csv;
    csv << "comparison,word,delta,cumulative\n";
    if (!doc["word_shift"].empty()) {
      const auto& shift = doc["word_shift"][0];
      std::string name = shift["name"];
      canvas.text(280, 24, name + " (total " + svg_num(shift["total_shift"].get<double>()) + ")",
                  12, "middle");
      double max_abs = 1e-12;
      for (const auto& c : shift["contributions"])
        max_abs = std::max(max_abs, std::fabs(c["delta"].get<double>()));
      double y = 48;
      double mid = 330;
      canvas.line(mid, 40, mid, 44 + 16.0 * shift["contributions"].size(), "#333");
      for (const auto& c : shift["contributions"]) {
        std::string word = c["word"];
        double delta = c["delta"].get<double>();
        csv << name << "," << word << "," << std::fixed << std::setprecision(9) << delta << ","
            << c["cumulative"].get<double>() << "\n";
        double w = std::fabs(delta) / max_abs * 180.0;
        if (delta >= 0)
          canvas.rect(mid, y, w, 11, "#4f9d55");
        else
          canvas.rect(mid - w, y, w, 11, "#c0504d");
        canvas.text(mid - (delta < 0 ? w : 0) - 6, y + 9, word, 10, "end");
        y += 16;
      }
    }
    write_file(fig_dir + "fig_wordshift.svg", canvas.finish());
    write_file(fig_dir + "fig_wordshift.csv", csv.str());
  }

  write_run_manifest(config, "plot", {});
  std::cout << "plot: 4 figures written to " << fig_dir << "\n";
  return kExitOk;
}

}  // namespace memod
