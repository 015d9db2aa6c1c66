#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/embedding.hpp"
#include "detect/llm/chat.hpp"
#include "detect/model/metric_model.hpp"
#include "json.hpp"

namespace detect::service {

struct CurateConfig {
  std::filesystem::path input;
  std::string similarity_encoder = "hashing-64";
  double similarity_threshold = 0.0;  // BERTScore-P of the primary reference against the complex text
  double test_fraction = 0.375;
  std::vector<CellQuota> quotas;  // when set, replaces the proportional split
};

struct GenerateConfig {
  std::vector<llm::ChatEndpoint> endpoints;
  std::size_t concurrency = 4;
  std::string subset = "all";  // all | train | test
  std::filesystem::path few_shot_file;
};

struct JudgeConfig {
  std::vector<llm::ChatEndpoint> endpoints;
  std::size_t n_runs = 10;
  std::size_t concurrency = 4;
};

struct TrainConfig {
  model::MetricModelConfig model = model::preset("toy");
  double validation_fraction = 0.2;
};

struct EvaluateConfig {
  std::string bertscore_encoder = "hashing-64";
  std::filesystem::path human_annotations;  // optional annotation export (JSONL)
  std::size_t permutations = 0;             // > 0 adds permutation p-values
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path journal;  // default <out-dir>/annotate/journal.jsonl
  std::string subset = "test";
  std::size_t batch_size = 5;
  std::size_t compact_every = 256;
};

// Mirrors the module configs. Relative paths resolve against the config file's directory.
struct PipelineConfig {
  std::uint64_t seed = 0;
  EmbedderOptions embedder;
  CurateConfig curate;
  GenerateConfig generate;
  JudgeConfig judge;
  TrainConfig train;
  EvaluateConfig evaluate;
  ServeConfig serve;
};

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// Effective settings per step, echoed into run manifests (paths excluded).
nlohmann::json curate_json(const PipelineConfig& c);
nlohmann::json generate_json(const PipelineConfig& c);
nlohmann::json judge_json(const PipelineConfig& c);
nlohmann::json train_json(const PipelineConfig& c);
nlohmann::json evaluate_json(const PipelineConfig& c);

}  // namespace detect::service
