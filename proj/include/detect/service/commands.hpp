#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "detect/llm/chat.hpp"
#include "detect/llm/pipeline.hpp"
#include "detect/service/annotation_store.hpp"
#include "detect/service/config.hpp"
#include "detect/service/evaluation.hpp"
#include "detect/service/manifest.hpp"

namespace detect::service {

using ClientFactory = std::function<std::shared_ptr<const llm::ChatClient>(const llm::ChatEndpoint&)>;

// Each step reads its upstream artifacts from <out_dir>/<step>/ and writes its own there,
// together with one manifest.json.
struct CommandContext {
  PipelineConfig config;
  std::filesystem::path out_dir = "out";
  ClientFactory client_factory;           // default: make_chat_client
  std::function<std::string()> clock;     // default: utc_timestamp
};

struct CommandResult {
  std::filesystem::path dir;
  RunManifest manifest;
  std::vector<std::string> warnings;
};

std::filesystem::path step_dir(const std::filesystem::path& out_dir, Step step);

CommandResult cmd_curate(const CommandContext& ctx);
CommandResult cmd_generate(const CommandContext& ctx);
CommandResult cmd_judge(const CommandContext& ctx);
CommandResult cmd_train(const CommandContext& ctx);
CommandResult cmd_evaluate(const CommandContext& ctx);
CommandResult cmd_report(const CommandContext& ctx);

// Blocks serving the annotation API until the process is stopped.
void cmd_serve(const CommandContext& ctx);

// Scores one pair with a trained model directory.
nlohmann::json cmd_score(const std::filesystem::path& model_dir, const EmbedderOptions& embedder,
                         const std::string& complex, const std::string& simplification,
                         const std::vector<std::string>& references);

// Krippendorff alpha (interval) per criterion and for the total over a rater x item table;
// null where undefined.
nlohmann::json alpha_summary(const std::vector<AnnotationRecord>& ratings);
// Per-item mean over raters of each criterion (the Human-Judge / LLM-Judge score).
std::map<RatingItem, llm::CriterionScores> mean_by_item(const std::vector<AnnotationRecord>& ratings);
// Per-judge mean scores as rater entries, so judges and humans share one code path.
std::vector<AnnotationRecord> judge_ratings(const std::vector<llm::PairAggregate>& aggregates);

}  // namespace detect::service
