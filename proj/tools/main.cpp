#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memod/pipeline.hpp"

namespace {

struct Cli {
  std::string config_path;
  std::string dataset;
  int shots = 0;
  std::string retriever;
  std::string out;
  bool mock = false;
};

void add_common(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "run configuration file")->required();
  cmd->add_option("--dataset", cli.dataset, "override the dataset name");
  cmd->add_option("--shots", cli.shots, "number of in-context exemplars");
  cmd->add_option("--retriever", cli.retriever, "cosine or cosine-balanced");
  cmd->add_option("--out", cli.out, "output directory");
  cmd->add_flag("--mock", cli.mock, "use deterministic in-process backends");
}

memod::RunConfig load_config(const Cli& cli) {
  memod::RunConfig config = memod::RunConfig::load(cli.config_path);
  if (!cli.dataset.empty()) config.dataset_name = cli.dataset;
  if (cli.shots > 0) config.n_shots = cli.shots;
  if (!cli.retriever.empty()) {
    if (cli.retriever == "cosine") {
      config.balanced_shots = false;
    } else if (cli.retriever == "cosine-balanced") {
      config.balanced_shots = true;
    } else {
      throw memod::ConfigError("unknown retriever: " + cli.retriever);
    }
  }
  if (!cli.out.empty()) config.out_dir = cli.out;
  if (cli.mock) config.mock = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot meme moderation pipeline"};
  app.require_subcommand(1);

  Cli cli;
  memod::EvaluateOptions eval_options;
  memod::AnalyzeOptions analyze_options;

  auto* enrich = app.add_subcommand("enrich", "generate silver data via the agent endpoints");
  auto* index = app.add_subcommand("index", "embed the train pool and build the exemplar index");
  auto* run = app.add_subcommand("run", "few-shot inference over the test manifest");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions into JSON/CSV reports");
  auto* analyze = app.add_subcommand("analyze", "subgroup text statistics and word shifts");
  auto* plot = app.add_subcommand("plot", "emit SVG figures from the analysis file");
  for (auto* cmd : {enrich, index, run, evaluate, analyze, plot}) add_common(cmd, cli);

  evaluate->add_option("--predictions", eval_options.predictions_path,
                       "predictions file (default run directory)");
  evaluate->add_flag("--agent-eval", eval_options.agent_eval,
                     "score stored agent outputs against references");
  evaluate->add_option("--store", eval_options.store_path, "silver store with agent outputs");
  evaluate->add_option("--references", eval_options.references_path,
                       "silver-format reference file");
  analyze->add_option("--predictions", analyze_options.predictions_path,
                      "predictions file (default run directory)");
  analyze->add_option("--compare", analyze_options.compare_predictions_path,
                      "second predictions file for the intervention word shift");
  analyze->add_option("--compare-label", analyze_options.compare_model_label,
                      "label for the comparison model");

  CLI11_PARSE(app, argc, argv);

  try {
    memod::RunConfig config = load_config(cli);
    if (enrich->parsed()) return memod::cmd_enrich(config);
    if (index->parsed()) return memod::cmd_index(config);
    if (run->parsed()) return memod::cmd_run(config);
    if (evaluate->parsed()) return memod::cmd_evaluate(config, eval_options);
    if (analyze->parsed()) return memod::cmd_analyze(config, analyze_options);
    if (plot->parsed()) return memod::cmd_plot(config);
  } catch (const memod::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return memod::kExitConfigError;
  } catch (const memod::BackendUnavailable& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return memod::kExitBackendFailure;
  } catch (const memod::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return memod::kExitDataError;
  }
  return memod::kExitOk;
}
