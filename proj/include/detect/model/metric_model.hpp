#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detect/embedding.hpp"
#include "detect/hashing.hpp"
#include "detect/kernels.hpp"
#include "detect/llm/scores.hpp"
#include "json.hpp"

namespace detect::model {

using Triple = std::array<double, 3>;  // simplicity, meaning preservation, fluency

struct MetricModelConfig {
  std::string name = "custom";
  std::string encoder_id = "hashing-32";
  double dropout = 0.1;
  double learning_rate = 1e-3;
  std::vector<std::size_t> hidden_sizes = {64};
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  std::size_t batch_size = 8;
  // The encoder is always frozen here; false is rejected rather than silently ignored.
  bool freeze_encoder = true;

  void validate() const;  // throws InvalidArgument
};

// "multi", "multi_reg", "multi_reg_wechsel", "multi_wechsel_reduced" and the desk-scale "toy".
MetricModelConfig preset(std::string_view name);
std::vector<std::string> preset_names();

nlohmann::json to_json(const MetricModelConfig& c);
MetricModelConfig config_from_json(const nlohmann::json& j);

// [e_c; e_s; e_r; e_s*e_c; e_s*e_r; e_s-e_c; e_s-e_r], e_r the mean of the reference vectors.
std::vector<double> assemble_features(std::span<const double> e_c, std::span<const double> e_s,
                                      const std::vector<std::vector<double>>& e_refs);
std::vector<double> build_features(std::string_view complex, std::string_view simplification,
                                   const std::vector<std::string>& references, const EmbeddingProvider& embedder);

// Mean over criteria of squared error.
double loss(const Triple& predicted, const Triple& target);

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;
};

// Feed-forward regressor: tanh hidden layers with (inverted) dropout, linear 3-way output.
class Network {
 public:
  Network() = default;
  // Xavier-uniform weights, zero biases.
  Network(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  // Inference: dropout off, deterministic. Throws InvalidArgument on dimension mismatch.
  Triple forward(std::span<const double> features) const;
  std::vector<Triple> forward_batch(kernels::MatrixView x) const;

  // Mean batch loss against `targets` (rows of the batch); adds d loss / d parameter into
  // `grads` (same shape as layers(), zero it first). Dropout is applied when rng is given.
  double loss_and_gradients(kernels::MatrixView x, const std::vector<Triple>& targets, std::vector<Layer>& grads,
                            double dropout = 0.0, SplitMix64* rng = nullptr) const;
  std::vector<Layer> zero_gradients() const;

 private:
  std::vector<Layer> layers_;
};

struct Calibration {
  Triple mean{};
  Triple stddev{1.0, 1.0, 1.0};
};

// 100 * Phi((raw - mean) / stddev) per criterion. Throws InvalidArgument when a stddev is 0.
llm::CriterionScores rescale(const Triple& raw, const Calibration& calibration);

struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<llm::CriterionScores> targets;  // LLM-Judge scores on [0,100]
  std::size_t size() const { return features.size(); }
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  Triple val_pearson{};
  Triple val_spearman{};
  double mean_pearson = 0.0;  // NaN when undefined (constant predictions, < 3 rows)
  double mean_spearman = 0.0;
};

struct RawPrediction {
  Triple raw{};
  llm::CriterionScores rescaled;
};

struct ScoreResult {
  llm::CriterionScores scores;
  double total = 0.0;
  Triple raw{};
};

class MetricModel {
 public:
  MetricModel() = default;
  MetricModel(MetricModelConfig config, Network network, Calibration target_scale, Calibration calibration,
              std::shared_ptr<const EmbeddingProvider> embedder);

  const MetricModelConfig& config() const { return config_; }
  const Network& network() const { return network_; }
  // Per-criterion mean/std used to z-score training targets.
  const Calibration& target_scale() const { return target_scale_; }
  const Calibration& calibration() const { return calibration_; }
  const EmbeddingProvider& embedder() const;

  RawPrediction predict(std::span<const double> features) const;
  // build_features -> forward -> rescale -> total_score. Safe for concurrent callers.
  ScoreResult score(std::string_view complex, std::string_view simplification,
                    const std::vector<std::string>& references) const;

  // Writes weights.bin, config.json, calibration.json and manifest.json (lineage merged in).
  void save(const std::filesystem::path& dir, const nlohmann::json& lineage = nlohmann::json::object()) const;
  static MetricModel load(const std::filesystem::path& dir, const EmbedderOptions& options = {});

 private:
  MetricModelConfig config_;
  Network network_;
  Calibration target_scale_;
  Calibration calibration_;
  std::shared_ptr<const EmbeddingProvider> embedder_;
};

struct TrainResult {
  MetricModel model;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;    // 1-based
  double initial_loss = 0.0;     // full-train-set loss before the first update
  double final_loss = 0.0;       // full-train-set loss of the returned checkpoint
};

// Adam (beta 0.9/0.999) over shuffled mini-batches; the returned model is the epoch with the
// best mean validation Pearson (NaN ranks last, ties go to the later epoch). Reproducible for
// a fixed seed. Throws Error on a non-finite loss.
TrainResult train(const Dataset& train_set, const Dataset& val_set, const MetricModelConfig& config,
                  std::shared_ptr<const EmbeddingProvider> embedder);

}  // namespace detect::model
