#include "detect/model/metric_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "detect/error.hpp"
#include "detect/io.hpp"
#include "detect/stats.hpp"

namespace detect::model {

using kernels::MatrixView;
using kernels::MutableMatrixView;

// ---- config ----------------------------------------------------------------------------

void MetricModelConfig::validate() const {
  if (encoder_id.empty()) throw InvalidArgument("model config: encoder_id is empty");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("model config: dropout must be in [0,1)");
  if (!(learning_rate > 0.0)) throw InvalidArgument("model config: learning_rate must be > 0");
  if (hidden_sizes.empty()) throw InvalidArgument("model config: hidden_sizes must not be empty");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw InvalidArgument("model config: hidden sizes must be positive");
  }
  if (epochs == 0) throw InvalidArgument("model config: epochs must be >= 1");
  if (batch_size == 0) throw InvalidArgument("model config: batch_size must be >= 1");
  if (!freeze_encoder) {
    throw InvalidArgument("model config: encoder fine-tuning is not supported; set freeze_encoder to true");
  }
}

MetricModelConfig preset(std::string_view name) {
  MetricModelConfig c;
  c.name = std::string(name);
  c.epochs = 5;
  if (name == "multi") {
    c.dropout = 0.10, c.learning_rate = 3e-5, c.encoder_id = "xlm-roberta-base", c.hidden_sizes = {2304, 768};
  } else if (name == "multi_reg") {
    c.dropout = 0.20, c.learning_rate = 1e-5, c.encoder_id = "xlm-roberta-base", c.hidden_sizes = {2304, 768};
  } else if (name == "multi_reg_wechsel") {
    c.dropout = 0.20, c.learning_rate = 1e-5, c.encoder_id = "roberta-base-wechsel-german", c.hidden_sizes = {2304, 768};
  } else if (name == "multi_wechsel_reduced") {
    c.dropout = 0.10, c.learning_rate = 1e-5, c.encoder_id = "roberta-base-wechsel-german", c.hidden_sizes = {128, 64};
  } else if (name == "toy") {
    c.dropout = 0.0, c.learning_rate = 3e-3, c.encoder_id = "hashing-32", c.hidden_sizes = {32}, c.epochs = 30;
  } else {
    throw InvalidArgument("unknown model preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"multi", "multi_reg", "multi_reg_wechsel", "multi_wechsel_reduced", "toy"};
}

nlohmann::json to_json(const MetricModelConfig& c) {
  return {{"name", c.name},
          {"encoder_id", c.encoder_id},
          {"dropout", c.dropout},
          {"learning_rate", c.learning_rate},
          {"hidden_sizes", c.hidden_sizes},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"batch_size", c.batch_size},
          {"freeze_encoder", c.freeze_encoder},
          {"loss", "mean_squared_error_over_criteria"},
          {"optimizer", "adam"},
          {"activation", "tanh"}};
}

// Starts from the named preset when "preset" is given, then applies explicit keys.
MetricModelConfig config_from_json(const nlohmann::json& j) {
  MetricModelConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : MetricModelConfig{};
  c.name = j.value("name", c.name);
  c.encoder_id = j.value("encoder_id", c.encoder_id);
  c.dropout = j.value("dropout", c.dropout);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.freeze_encoder = j.value("freeze_encoder", c.freeze_encoder);
  c.validate();
  return c;
}

// ---- features --------------------------------------------------------------------------

std::vector<double> assemble_features(std::span<const double> e_c, std::span<const double> e_s,
                                      const std::vector<std::vector<double>>& e_refs) {
  const std::size_t d = e_s.size();
  if (e_c.size() != d) throw InvalidArgument("feature inputs differ in dimension");
  if (e_refs.empty()) throw InvalidArgument("features need at least one reference");
  std::vector<double> e_r(d, 0.0);
  for (const auto& r : e_refs) {
    if (r.size() != d) throw InvalidArgument("feature inputs differ in dimension");
    for (std::size_t i = 0; i < d; ++i) e_r[i] += r[i];
  }
  for (double& v : e_r) v /= static_cast<double>(e_refs.size());

  std::vector<double> f(7 * d);
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = e_c[i];
    f[d + i] = e_s[i];
    f[2 * d + i] = e_r[i];
    f[3 * d + i] = e_s[i] * e_c[i];
    f[4 * d + i] = e_s[i] * e_r[i];
    f[5 * d + i] = e_s[i] - e_c[i];
    f[6 * d + i] = e_s[i] - e_r[i];
  }
  return f;
}

std::vector<double> build_features(std::string_view complex, std::string_view simplification,
                                   const std::vector<std::string>& references, const EmbeddingProvider& embedder) {
  if (references.empty()) throw InvalidArgument("features need at least one reference");
  const auto e_c = embedder.embed(complex).sentence;
  const auto e_s = embedder.embed(simplification).sentence;
  std::vector<std::vector<double>> e_refs;
  for (const auto& r : references) e_refs.push_back(embedder.embed(r).sentence);
  return assemble_features(e_c, e_s, e_refs);
}

double loss(const Triple& predicted, const Triple& target) {
  double sum = 0.0;
  for (std::size_t c = 0; c < 3; ++c) sum += (predicted[c] - target[c]) * (predicted[c] - target[c]);
  return sum / 3.0;
}

// ---- network ---------------------------------------------------------------------------

Network::Network(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed) {
  if (input_dim == 0) throw InvalidArgument("network input dimension must be positive");
  SplitMix64 rng(seed);
  std::size_t in = input_dim;
  std::vector<std::size_t> sizes = hidden_sizes;
  sizes.push_back(3);
  for (std::size_t out : sizes) {
    Layer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : l.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
    layers_.push_back(std::move(l));
    in = out;
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<Layer> Network::zero_gradients() const {
  std::vector<Layer> g;
  for (const auto& l : layers_) {
    g.push_back({l.in, l.out, std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

std::vector<Triple> Network::forward_batch(MatrixView x) const {
  if (layers_.empty()) throw InvalidArgument("network has no layers");
  if (x.cols != input_dim()) {
    throw InvalidArgument("feature dimension " + std::to_string(x.cols) + " does not match model input " +
                          std::to_string(input_dim()));
  }
  std::vector<double> current(x.data.begin(), x.data.end());
  std::size_t width = x.cols;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    std::vector<double> next(x.rows * l.out);
    kernels::affine_forward({current, x.rows, width}, {l.weights, l.out, l.in}, l.bias, {next, x.rows, l.out});
    if (li + 1 < layers_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    current = std::move(next);
    width = l.out;
  }
  std::vector<Triple> out(x.rows);
  for (std::size_t b = 0; b < x.rows; ++b) out[b] = {current[b * 3], current[b * 3 + 1], current[b * 3 + 2]};
  return out;
}

Triple Network::forward(std::span<const double> features) const {
  return forward_batch({features, 1, features.size()}).front();
}

double Network::loss_and_gradients(MatrixView x, const std::vector<Triple>& targets, std::vector<Layer>& grads,
                                   double dropout, SplitMix64* rng) const {
  if (x.cols != input_dim()) throw InvalidArgument("feature dimension does not match model input");
  if (targets.size() != x.rows) throw InvalidArgument("batch and target counts differ");
  const std::size_t batch = x.rows;
  const std::size_t n_layers = layers_.size();
  const bool drop = rng != nullptr && dropout > 0.0;
  const double keep_scale = drop ? 1.0 / (1.0 - dropout) : 1.0;

  // activations[l] is the input of layer l; tanh_out/masks are per hidden layer.
  std::vector<std::vector<double>> activations(n_layers);
  std::vector<std::vector<double>> tanh_out(n_layers);
  std::vector<std::vector<double>> masks(n_layers);
  activations[0].assign(x.data.begin(), x.data.end());
  std::vector<double> output;
  for (std::size_t li = 0; li < n_layers; ++li) {
    const Layer& l = layers_[li];
    std::vector<double> z(batch * l.out);
    kernels::affine_forward({activations[li], batch, l.in}, {l.weights, l.out, l.in}, l.bias, {z, batch, l.out});
    if (li + 1 == n_layers) {
      output = std::move(z);
      break;
    }
    std::vector<double> mask(z.size(), 1.0);
    if (drop) {
      for (double& m : mask) m = rng->uniform() < dropout ? 0.0 : keep_scale;
    }
    std::vector<double> a(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = std::tanh(z[k]);
      a[k] = z[k] * mask[k];
    }
    tanh_out[li] = std::move(z);
    masks[li] = std::move(mask);
    activations[li + 1] = std::move(a);
  }

  double total = 0.0;
  std::vector<double> delta(batch * 3);
  const double scale = 2.0 / (3.0 * static_cast<double>(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    const Triple pred{output[b * 3], output[b * 3 + 1], output[b * 3 + 2]};
    total += loss(pred, targets[b]);
    for (std::size_t c = 0; c < 3; ++c) delta[b * 3 + c] = scale * (pred[c] - targets[b][c]);
  }

  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& l = layers_[li];
    kernels::affine_backward_params({activations[li], batch, l.in}, {delta, batch, l.out},
                                    {grads[li].weights, l.out, l.in}, grads[li].bias);
    if (li == 0) break;
    std::vector<double> d_in(batch * l.in);
    kernels::affine_backward_input({delta, batch, l.out}, {l.weights, l.out, l.in}, {d_in, batch, l.in});
    const auto& t = tanh_out[li - 1];
    const auto& m = masks[li - 1];
    for (std::size_t k = 0; k < d_in.size(); ++k) d_in[k] *= m[k] * (1.0 - t[k] * t[k]);
    delta = std::move(d_in);
  }
  return total / static_cast<double>(batch);
}

// ---- rescaling -------------------------------------------------------------------------

llm::CriterionScores rescale(const Triple& raw, const Calibration& calibration) {
  llm::CriterionScores s;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!(calibration.stddev[c] > 0.0)) throw InvalidArgument("rescale: calibration stddev must be > 0");
    s[llm::kCriteria[c]] = 100.0 * stats::normal_cdf((raw[c] - calibration.mean[c]) / calibration.stddev[c]);
  }
  return s;
}

// ---- model -----------------------------------------------------------------------------

MetricModel::MetricModel(MetricModelConfig config, Network network, Calibration target_scale, Calibration calibration,
                         std::shared_ptr<const EmbeddingProvider> embedder)
    : config_(std::move(config)),
      network_(std::move(network)),
      target_scale_(target_scale),
      calibration_(calibration),
      embedder_(std::move(embedder)) {
  if (embedder_ && 7 * embedder_->dimension() != network_.input_dim()) {
    throw InvalidArgument("encoder dimension does not match the network input");
  }
}

const EmbeddingProvider& MetricModel::embedder() const {
  if (!embedder_) throw Error("metric model has no encoder attached");
  return *embedder_;
}

RawPrediction MetricModel::predict(std::span<const double> features) const {
  RawPrediction p;
  p.raw = network_.forward(features);
  p.rescaled = rescale(p.raw, calibration_);
  return p;
}

ScoreResult MetricModel::score(std::string_view complex, std::string_view simplification,
                               const std::vector<std::string>& references) const {
  const auto features = build_features(complex, simplification, references, embedder());
  const RawPrediction p = predict(features);
  return {p.rescaled, llm::total_score(p.rescaled), p.raw};
}

namespace {

static_assert(std::endian::native == std::endian::little, "weights blob assumes a little-endian host");

constexpr char kMagic[8] = {'D', 'E', 'T', 'W', 'G', 'T', '0', '1'};

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw SchemaError("weights blob is truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

std::string encode_weights(const Network& net) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, net.layers().size());
  for (const auto& l : net.layers()) {
    put<std::uint64_t>(out, l.in);
    put<std::uint64_t>(out, l.out);
  }
  for (const auto& l : net.layers()) {
    out.append(reinterpret_cast<const char*>(l.weights.data()), l.weights.size() * sizeof(double));
    out.append(reinterpret_cast<const char*>(l.bias.data()), l.bias.size() * sizeof(double));
  }
  return out;
}

Network decode_weights(std::string_view in) {
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw SchemaError("not a metric-model weights blob");
  }
  in.remove_prefix(sizeof kMagic);
  const auto n = take<std::uint64_t>(in);
  if (n == 0 || n > 64) throw SchemaError("weights blob has an implausible layer count");
  Network net;
  for (std::uint64_t i = 0; i < n; ++i) {
    Layer l;
    l.in = take<std::uint64_t>(in);
    l.out = take<std::uint64_t>(in);
    net.layers().push_back(std::move(l));
  }
  for (auto& l : net.layers()) {
    l.weights.resize(l.in * l.out);
    l.bias.resize(l.out);
    for (double& w : l.weights) w = take<double>(in);
    for (double& b : l.bias) b = take<double>(in);
  }
  if (!in.empty()) throw SchemaError("weights blob has trailing bytes");
  if (net.layers().back().out != 3) throw SchemaError("weights blob does not end in 3 outputs");
  return net;
}

nlohmann::json calibration_json(const Calibration& c) {
  nlohmann::json j;
  for (std::size_t k = 0; k < 3; ++k) {
    j[std::string(llm::to_string(llm::kCriteria[k]))] = {{"mean", c.mean[k]}, {"std", c.stddev[k]}};
  }
  return j;
}

Calibration calibration_from(const nlohmann::json& j) {
  Calibration c;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& e = j.at(std::string(llm::to_string(llm::kCriteria[k])));
    c.mean[k] = e.at("mean").get<double>();
    c.stddev[k] = e.at("std").get<double>();
  }
  return c;
}

}  // namespace

void MetricModel::save(const std::filesystem::path& dir, const nlohmann::json& lineage) const {
  std::filesystem::create_directories(dir);
  const std::string blob = encode_weights(network_);
  write_file_atomic(dir / "weights.bin", blob);
  write_file_atomic(dir / "config.json", to_json(config_).dump(2) + "\n");
  const nlohmann::json calib = {{"target_scale", calibration_json(target_scale_)},
                                {"raw_output", calibration_json(calibration_)}};
  write_file_atomic(dir / "calibration.json", calib.dump(2) + "\n");
  nlohmann::json manifest = lineage.is_object() ? lineage : nlohmann::json::object();
  manifest["format"] = "detect-metric-model/1";
  manifest["weights_sha256"] = sha256_hex(blob);
  manifest["input_dim"] = network_.input_dim();
  manifest["parameter_count"] = network_.parameter_count();
  manifest["encoder_id"] = config_.encoder_id;
  manifest["encoder_dimension"] = network_.input_dim() / 7;
  manifest["seed"] = config_.seed;
  manifest["epochs"] = config_.epochs;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MetricModel MetricModel::load(const std::filesystem::path& dir, const EmbedderOptions& options) {
  if (!std::filesystem::is_directory(dir)) throw Error("no trained model at " + dir.string());
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  const std::string blob = read_file(dir / "weights.bin");
  if (manifest.at("weights_sha256").get<std::string>() != sha256_hex(blob)) {
    throw SchemaError("weights.bin does not match its manifest hash", 0, dir.string());
  }
  MetricModelConfig config = config_from_json(nlohmann::json::parse(read_file(dir / "config.json")));
  const auto calib = nlohmann::json::parse(read_file(dir / "calibration.json"));
  EmbedderOptions resolved = options;
  resolved.dimension = manifest.at("encoder_dimension").get<std::size_t>();
  auto embedder = resolve_embedder(config.encoder_id, resolved);
  return MetricModel(std::move(config), decode_weights(blob), calibration_from(calib.at("target_scale")),
                     calibration_from(calib.at("raw_output")), std::move(embedder));
}

// ---- training --------------------------------------------------------------------------

namespace {

struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  std::size_t step = 0;
};

void adam_update(Network& net, const std::vector<Layer>& grads, AdamState& state, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++state.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto apply = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    apply(net.layers()[l].weights, grads[l].weights, state.m[l].weights, state.v[l].weights);
    apply(net.layers()[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias);
  }
}

Calibration target_scale_of(const Dataset& d) {
  Calibration s;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> v;
    for (const auto& t : d.targets) v.push_back(t[llm::kCriteria[c]]);
    s.mean[c] = stats::mean(v);
    const double sd = stats::sample_std(v);
    s.stddev[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Triple normalized(const llm::CriterionScores& t, const Calibration& scale) {
  Triple z;
  for (std::size_t c = 0; c < 3; ++c) z[c] = (t[llm::kCriteria[c]] - scale.mean[c]) / scale.stddev[c];
  return z;
}

std::vector<double> flatten(const Dataset& d, const std::vector<std::size_t>& rows, std::size_t dim) {
  std::vector<double> x(rows.size() * dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = d.features[rows[r]];
    std::copy(f.begin(), f.end(), x.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  return x;
}

std::vector<Triple> predict_all(const Network& net, const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  const std::size_t dim = net.input_dim();
  const auto x = flatten(d, rows, dim);
  return net.forward_batch({x, rows.size(), dim});
}

double dataset_loss(const Network& net, const Dataset& d, const Calibration& scale) {
  const auto preds = predict_all(net, d);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += loss(preds[i], normalized(d.targets[i], scale));
  return total / static_cast<double>(preds.size());
}

double correlation_or_nan(const std::vector<double>& x, const std::vector<double>& y, bool rank) {
  try {
    return rank ? stats::spearman(x, y).statistic : stats::pearson(x, y).statistic;
  } catch (const DegenerateInput&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void validation_metrics(const Network& net, const Dataset& val, EpochMetrics& m) {
  const auto preds = predict_all(net, val);
  double sum_p = 0.0, sum_s = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      x.push_back(preds[i][c]);
      y.push_back(val.targets[i][llm::kCriteria[c]]);
    }
    m.val_pearson[c] = correlation_or_nan(x, y, false);
    m.val_spearman[c] = correlation_or_nan(x, y, true);
    sum_p += m.val_pearson[c];
    sum_s += m.val_spearman[c];
  }
  m.mean_pearson = sum_p / 3.0;
  m.mean_spearman = sum_s / 3.0;
}

void check_dataset(const Dataset& d, std::size_t dim, const char* name) {
  if (d.size() == 0) throw InvalidArgument(std::string(name) + " set is empty");
  if (d.targets.size() != d.features.size()) throw InvalidArgument(std::string(name) + " set: feature/target count mismatch");
  for (const auto& f : d.features) {
    if (f.size() != dim) throw InvalidArgument(std::string(name) + " set: feature dimension mismatch");
  }
  for (const auto& t : d.targets) {
    if (!t.in_range()) throw InvalidArgument(std::string(name) + " set: target outside [0,100]");
  }
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& val_set, const MetricModelConfig& config,
                  std::shared_ptr<const EmbeddingProvider> embedder) {
  config.validate();
  if (!embedder) throw InvalidArgument("train: no encoder");
  const std::size_t dim = 7 * embedder->dimension();
  check_dataset(train_set, dim, "training");
  check_dataset(val_set, dim, "validation");

  const Calibration scale = target_scale_of(train_set);
  Network net(dim, config.hidden_sizes, config.seed);
  AdamState adam{net.zero_gradients(), net.zero_gradients(), 0};

  TrainResult result;
  result.initial_loss = dataset_loss(net, train_set, scale);
  Network best = net;
  double best_score = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    SplitMix64 rng(config.seed ^ (0x9e3779b97f4a7c15ULL * epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
      const auto x = flatten(train_set, rows, dim);
      std::vector<Triple> targets;
      for (std::size_t r : rows) targets.push_back(normalized(train_set.targets[r], scale));
      auto grads = net.zero_gradients();
      const double batch_loss = net.loss_and_gradients({x, rows.size(), dim}, targets, grads, config.dropout, &rng);
      if (!std::isfinite(batch_loss)) {
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                    std::to_string(start) + " (learning_rate " + std::to_string(config.learning_rate) + ")");
      }
      epoch_loss += batch_loss * static_cast<double>(rows.size());
      adam_update(net, grads, adam, config.learning_rate);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / static_cast<double>(order.size());
    validation_metrics(net, val_set, m);
    result.history.push_back(m);
    const double score = std::isnan(m.mean_pearson) ? -std::numeric_limits<double>::infinity() : m.mean_pearson;
    if (score >= best_score) {
      best_score = score;
      best = net;
      result.best_epoch = epoch;
    }
  }

  result.final_loss = dataset_loss(best, train_set, scale);
  // Calibrate on the chosen checkpoint's raw outputs over the training set.
  Calibration calib;
  const auto raw = predict_all(best, train_set);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> v;
    for (const auto& r : raw) v.push_back(r[c]);
    calib.mean[c] = stats::mean(v);
    calib.stddev[c] = stats::sample_std(v);
    if (!(calib.stddev[c] > 0.0)) {
      throw DegenerateInput("calibration failed: raw " + std::string(llm::to_string(llm::kCriteria[c])) +
                            " outputs have zero spread on the training set");
    }
  }
  result.model = MetricModel(config, std::move(best), scale, calib, std::move(embedder));
  return result;
}

}  // namespace detect::model
