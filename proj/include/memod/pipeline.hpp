#pragma once

#include <memory>
#include <optional>
#include <string>

#include "memod/agents.hpp"
#include "memod/embedding.hpp"
#include "memod/metrics.hpp"

namespace memod {

struct ConfigError : Error {
  using Error::Error;
};

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitBackendFailure = 3;

struct BackendSpec {
  std::string backend = "mock";  // mock | precomputed | remote
  std::size_t dim = 16;
  std::string path;      // precomputed file
  std::string url;
  std::string model;
  std::string auth_env;
};

struct EndpointSpec {
  std::string url;
  std::string model;
  std::string auth_env;
};

struct RunConfig {
  std::string dataset_name;
  std::string train_manifest;
  std::string test_manifest;

  BackendSpec embedding;
  std::map<std::string, EndpointSpec> agent_endpoints;  // caption/explanation/...
  std::string model_backend = "mock";                   // mock | remote
  EndpointSpec model;

  int n_shots = 2;
  double temperature = 0.001;
  int max_new_tokens = 100;
  int in_flight = 4;
  std::string shot_order = "similarity_desc";  // or similarity_asc
  bool balanced_shots = false;
  bool dump_transcripts = false;

  LabelTokens labels;
  std::string positive_definition;
  std::string negative_definition;

  std::string sentiment_lexicon;  // optional valence lexicon path
  std::string templates_dir;      // optional agent template overrides
  std::string out_dir = "out";
  bool mock = false;  // force deterministic in-process backends

  static RunConfig load(const std::string& path);

  std::string model_label() const;
  std::string dataset_dir() const;                      // <out>/<dataset>/
  std::string run_dir() const;                          // <out>/<dataset>/<model>/<shots>/
  std::string config_digest() const;
};

// Backend factories honoring --mock.
std::shared_ptr<EmbeddingBackend> make_embedding_backend(const RunConfig& config);
std::shared_ptr<ChatBackend> make_model_backend(const RunConfig& config);
AgentSet make_agent_set(const RunConfig& config);

struct EvaluateOptions {
  std::string predictions_path;  // default <run_dir>/predictions.jsonl
  bool agent_eval = false;       // appendix-style agent-output scoring
  std::string store_path;        // agent_eval: silver store with agent outputs
  std::string references_path;   // agent_eval: silver-format reference file
};

struct AnalyzeOptions {
  std::string predictions_path;
  std::string compare_predictions_path;  // second model for intervention word shift
  std::string compare_model_label;
};

int cmd_enrich(const RunConfig& config);
int cmd_index(const RunConfig& config);
int cmd_run(const RunConfig& config);
int cmd_evaluate(const RunConfig& config, const EvaluateOptions& options = {});
int cmd_analyze(const RunConfig& config, const AnalyzeOptions& options = {});
int cmd_plot(const RunConfig& config);

}  // namespace memod
