#include "doctest.h"

#include <cmath>
#include <fstream>

#include <omp.h>

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/io.hpp"
#include "detect/model/metric_model.hpp"
#include "detect/stats.hpp"
#include "oracles.hpp"
#include "model_checks.hpp"
#include "support.hpp"

using namespace detect;
using namespace detect::model;

using testing::max_gradient_error;
using testing::random_vector;
using testing::synthetic_dataset;

TEST_CASE("presets") {
  const auto r = preset("multi_wechsel_reduced");
  CHECK(r.dropout == 0.10);
  CHECK(r.learning_rate == 1e-5);
  CHECK(r.hidden_sizes == std::vector<std::size_t>{128, 64});
  CHECK(preset("multi").hidden_sizes == std::vector<std::size_t>{2304, 768});
  CHECK(preset("multi_reg").dropout == 0.20);
  CHECK(preset("multi_reg_wechsel").encoder_id == "roberta-base-wechsel-german");
  CHECK(preset_names().size() == 5);
  CHECK_THROWS_AS(preset("nope"), InvalidArgument);

  auto c = config_from_json({{"preset", "multi_reg"}, {"epochs", 2}});
  CHECK(c.dropout == 0.20);
  CHECK(c.epochs == 2);
  CHECK(config_from_json(to_json(c)).hidden_sizes == c.hidden_sizes);
  c.freeze_encoder = false;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = preset("toy");
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("feature vector is 7 x encoder dimension") {
  for (std::size_t d : {4u, 16u, 768u}) {
    const HashingEmbedder emb(d);
    const auto f = build_features("Der Satz ist lang und kompliziert.", "Der Satz ist kurz.",
                                  {"Der Satz ist einfach.", "Ein kurzer Satz."}, emb);
    CHECK(f.size() == 7 * d);
  }
  const std::vector<double> c = {1, 2}, s = {3, 5};
  const auto f = assemble_features(c, s, {{1, 1}, {3, 3}});  // mean reference {2, 2}
  CHECK(f == std::vector<double>{1, 2, 3, 5, 2, 2, 3, 10, 6, 10, 2, 3, 1, 3});
  CHECK_THROWS_AS(assemble_features(c, s, {}), InvalidArgument);
  CHECK_THROWS_AS(assemble_features(c, std::vector<double>{1}, {{1, 1}}), InvalidArgument);
}

TEST_CASE("analytic gradients match central differences") {
  CHECK(max_gradient_error(Network(6, {5, 4}, 3), 4) < 1e-4);
  CHECK(max_gradient_error(Network(3, {}, 4), 2) < 1e-4);  // linear model
  CHECK(max_gradient_error(Network(28, {8}, 5), 8) < 1e-4);
}

TEST_CASE("forward is the dropout-free network and batch forward agrees") {
  const Network net(10, {6}, 9);
  SplitMix64 rng(2);
  const auto x = random_vector(30, rng);
  const auto batch = net.forward_batch({x, 3, 10});
  for (std::size_t r = 0; r < 3; ++r) {
    const auto one = net.forward(std::span<const double>(x).subspan(r * 10, 10));
    CHECK(one == batch[r]);
  }
  CHECK_THROWS_AS(net.forward(std::vector<double>(9)), InvalidArgument);
  CHECK(net.parameter_count() == 10 * 6 + 6 + 6 * 3 + 3);
}

TEST_CASE("overfits ten examples") {
  const auto r = testing::overfit_ten();
  CHECK(r.final_loss < 0.01 * r.initial_loss);
  CHECK(r.history.size() == 400);
}

TEST_CASE("training is reproducible and picks the best validation epoch") {
  const auto emb = std::make_shared<HashingEmbedder>(4);
  const Dataset tr = synthetic_dataset(40, 28, 1), va = synthetic_dataset(12, 28, 2);
  MetricModelConfig cfg = preset("toy");
  cfg.epochs = 12;
  cfg.dropout = 0.2;
  cfg.seed = 5;
  const auto a = train(tr, va, cfg, emb);
  const auto b = train(tr, va, cfg, emb);
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.model.network().layers()[0].weights == b.model.network().layers()[0].weights);
  double best = -1e9;
  std::size_t want = 0;
  for (const auto& e : a.history) {
    if (!std::isnan(e.mean_pearson) && e.mean_pearson >= best) {
      best = e.mean_pearson;
      want = e.epoch;
    }
  }
  CHECK(a.best_epoch == want);
  cfg.seed = 6;
  CHECK(train(tr, va, cfg, emb).model.network().layers()[0].weights != a.model.network().layers()[0].weights);

  Dataset bad = tr;
  bad.features[3].pop_back();
  CHECK_THROWS_AS(train(bad, va, cfg, emb), InvalidArgument);
  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train(tr, va, cfg, emb), Error);
}

TEST_CASE("rescale is monotone and maps one sigma to 100 Phi(1)") {
  Calibration cal;
  cal.mean = {1.0, -2.0, 0.5};
  cal.stddev = {2.0, 0.5, 1.0};
  const auto at_sigma = rescale({3.0, -1.5, 1.5}, cal);
  const double want = 100.0 * oracle::normal_cdf_simpson(1.0);
  CHECK(std::fabs(at_sigma.simplicity - want) < 1e-3);
  CHECK(std::fabs(at_sigma.meaning_preservation - want) < 1e-3);
  CHECK(std::fabs(at_sigma.fluency - 84.134) < 1e-3);
  double prev = -1.0;
  for (double raw = -10.0; raw <= 10.0; raw += 0.25) {
    const double v = rescale({raw, raw, raw}, cal).simplicity;
    CHECK(v >= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
    prev = v;
  }
  CHECK(rescale(cal.mean, cal).fluency == doctest::Approx(50.0));
  cal.stddev[1] = 0.0;
  CHECK_THROWS_AS(rescale({0, 0, 0}, cal), InvalidArgument);
}

TEST_CASE("model directory round trip and tamper detection") {
  testing::TempDir tmp;
  const auto emb = std::make_shared<HashingEmbedder>(8);
  Dataset tr, va;
  const std::vector<std::string> texts = {"Der Hund bellt laut.", "Die Katze schläft.", "Das Wetter ist heute schön.",
                                          "Morgen regnet es.", "Die Stadt baut Radwege.", "Der Zug fährt ab."};
  SplitMix64 rng(4);
  for (std::size_t i = 0; i < 24; ++i) {
    const auto& c = texts[i % texts.size()];
    const auto& s = texts[(i * 5 + 1) % texts.size()];
    auto& d = i < 18 ? tr : va;
    d.features.push_back(build_features(c, s, {texts[(i + 2) % texts.size()]}, *emb));
    d.targets.push_back({100 * rng.uniform(), 100 * rng.uniform(), 100 * rng.uniform()});
  }
  MetricModelConfig cfg = preset("toy");
  cfg.encoder_id = "hashing-8";
  cfg.epochs = 5;
  const auto trained = train(tr, va, cfg, emb).model;
  trained.save(tmp.path() / "m", {{"data", "unit"}});
  const auto loaded = MetricModel::load(tmp.path() / "m");
  const auto a = trained.score("Der Hund bellt laut.", "Der Hund bellt.", {"Ein Hund bellt."});
  const auto b = loaded.score("Der Hund bellt laut.", "Der Hund bellt.", {"Ein Hund bellt."});
  CHECK(a.raw == b.raw);
  CHECK(a.scores == b.scores);
  CHECK(a.total == doctest::Approx(llm::total_score(a.scores)));
  CHECK(a.scores.in_range());

  const auto manifest = nlohmann::json::parse(read_file(tmp.path() / "m" / "manifest.json"));
  CHECK(manifest["weights_sha256"] == sha256_file(tmp.path() / "m" / "weights.bin"));
  CHECK(manifest["data"] == "unit");
  CHECK(manifest["parameter_count"] == trained.network().parameter_count());

  std::string blob = read_file(tmp.path() / "m" / "weights.bin");
  blob[blob.size() - 3] ^= 0x5a;
  write_file_atomic(tmp.path() / "m" / "weights.bin", blob);
  CHECK_THROWS_AS(MetricModel::load(tmp.path() / "m"), SchemaError);
  CHECK_THROWS(MetricModel::load(tmp.path() / "missing"));
}

TEST_CASE("OpenMP kernels equal their serial references bitwise") {
  namespace k = kernels;
  omp_set_num_threads(4);  // several threads even on a single-core runner
  SplitMix64 rng(77);
  for (const auto [rows, in, out] : {std::array<std::size_t, 3>{1, 7, 3}, {9, 33, 17}, {64, 100, 40}}) {
    const auto x = random_vector(rows * in, rng), w = random_vector(out * in, rng), b = random_vector(out, rng);
    const auto dy = random_vector(rows * out, rng);
    std::vector<double> y1(rows * out), y2(rows * out), dx1(rows * in), dx2(rows * in);
    std::vector<double> dw1(out * in, 0.5), dw2(out * in, 0.5), db1(out, 0.25), db2(out, 0.25);
    k::affine_forward({x, rows, in}, {w, out, in}, b, {y1, rows, out});
    k::serial::affine_forward({x, rows, in}, {w, out, in}, b, {y2, rows, out});
    CHECK(y1 == y2);
    k::affine_backward_input({dy, rows, out}, {w, out, in}, {dx1, rows, in});
    k::serial::affine_backward_input({dy, rows, out}, {w, out, in}, {dx2, rows, in});
    CHECK(dx1 == dx2);
    k::affine_backward_params({x, rows, in}, {dy, rows, out}, {dw1, out, in}, db1);
    k::serial::affine_backward_params({x, rows, in}, {dy, rows, out}, {dw2, out, in}, db2);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);
    std::vector<double> c1(rows * out), c2(rows * out);
    auto a = x;
    std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(in), 0.0);  // a zero row
    k::cosine_matrix({a, rows, in}, {w, out, in}, {c1, rows, out});
    k::serial::cosine_matrix({a, rows, in}, {w, out, in}, {c2, rows, out});
    CHECK(c1 == c2);
    CHECK(c1[0] == 0.0);
  }
  CHECK(k::max_threads() == 4);
}
