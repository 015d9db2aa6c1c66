// detect: command-line front end for the evaluation pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "detect/error.hpp"
#include "detect/service/commands.hpp"

namespace {

using namespace detect;
using namespace detect::service;

void print(const CommandResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << r.manifest.run_id << "  " << r.dir.string() << "\n";
  for (const auto& o : r.manifest.outputs) std::cout << "  " << o.sha256.substr(0, 12) << "  " << o.path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"detect - German text simplification evaluation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "JSON config file mirroring the module configs")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "artifact root; each step writes <out-dir>/<step>/")->capture_default_str();

  std::string input;
  auto* curate = app.add_subcommand("curate", "filter, classify and split raw pairs");
  curate->add_option("--input", input, "raw records (JSONL); overrides curate.input");
  auto* generate = app.add_subcommand("generate", "produce simplifications with the configured LLMs");
  auto* judge = app.add_subcommand("judge", "score simplifications with the judge LLMs");
  auto* train = app.add_subcommand("train", "train the learnable metric on LLM-Judge scores");
  std::string preset;
  train->add_option("--preset", preset, "model preset (multi, multi_reg, multi_reg_wechsel, multi_wechsel_reduced, toy)");
  auto* evaluate = app.add_subcommand("evaluate", "correlate metrics with Human-/LLM-Judge scores");
  std::string human;
  evaluate->add_option("--human", human, "annotation JSONL for Human-Judge scores")->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "corpus statistics and judge selection tables");
  auto* serve = app.add_subcommand("serve", "serve the annotation API under /v1/");
  std::optional<int> port;
  serve->add_option("--port", port, "listen port");
  auto* score = app.add_subcommand("score", "score one simplification with a trained model");
  std::string model_dir, complex, simplification;
  std::vector<std::string> refs;
  score->add_option("--model", model_dir, "model directory")->required()->check(CLI::ExistingDirectory);
  score->add_option("--complex", complex, "source text")->required();
  score->add_option("--simplification", simplification, "system output")->required();
  score->add_option("--reference", refs, "reference simplification (repeatable)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    CommandContext ctx;
    if (!config_path.empty()) ctx.config = load_config(config_path);
    if (seed) ctx.config.seed = *seed;
    ctx.out_dir = out_dir;
    if (!input.empty()) ctx.config.curate.input = input;
    if (!preset.empty()) ctx.config.train.model = model::preset(preset);
    if (!human.empty()) ctx.config.evaluate.human_annotations = human;
    if (port) ctx.config.serve.port = *port;

    if (*curate) print(cmd_curate(ctx));
    else if (*generate) print(cmd_generate(ctx));
    else if (*judge) print(cmd_judge(ctx));
    else if (*train) print(cmd_train(ctx));
    else if (*evaluate) print(cmd_evaluate(ctx));
    else if (*report) print(cmd_report(ctx));
    else if (*serve) {
      cmd_serve(ctx);
    } else if (*score) {
      std::cout << cmd_score(model_dir, ctx.config.embedder, complex, simplification, refs).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
