#include "detect/service/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "detect/classic_metrics.hpp"
#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/io.hpp"
#include "detect/llm/prompt.hpp"
#include "detect/model/metric_model.hpp"
#include "detect/parallel.hpp"
#include "detect/text.hpp"
#include "detect/service/annotation_api.hpp"
#include "detect/service/report.hpp"
#include "httplib.h"

namespace detect::service {

namespace fs = std::filesystem;

fs::path step_dir(const fs::path& out_dir, Step step) { return out_dir / std::string(to_string(step)); }

namespace {

constexpr const char* kDataset = "simpevalde.jsonl";
constexpr const char* kRejected = "rejected.jsonl";
constexpr const char* kOutputs = "outputs.jsonl";
constexpr const char* kFailures = "failures.jsonl";
constexpr const char* kSamples = "samples.jsonl";
constexpr const char* kAggregates = "aggregates.jsonl";
constexpr const char* kHistory = "history.jsonl";
constexpr const char* kModelDir = "model";

std::string now(const CommandContext& ctx) { return ctx.clock ? ctx.clock() : utc_timestamp(); }

std::shared_ptr<const llm::ChatClient> client_for(const CommandContext& ctx, const llm::ChatEndpoint& e) {
  if (ctx.client_factory) return ctx.client_factory(e);
  return llm::make_chat_client(e);
}

std::size_t hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Starts a manifest for `step`; inputs are verified against their producers' manifests.
RunManifest begin(const CommandContext& ctx, Step step, nlohmann::json config, const std::vector<fs::path>& inputs) {
  RunManifest m;
  m.step = step;
  m.seed = ctx.config.seed;
  m.config = std::move(config);
  m.started_at = now(ctx);
  for (const auto& in : inputs) {
    FileHash h = verify_input(in);
    h.path = fs::relative(in, ctx.out_dir).generic_string();
    if (h.path.empty() || h.path.rfind("..", 0) == 0) h.path = in.filename().generic_string();
    m.inputs.push_back(std::move(h));
  }
  m.run_id = derive_run_id(step, m.config, m.inputs, m.seed);
  return m;
}

CommandResult finish(const CommandContext& ctx, const fs::path& dir, RunManifest m, const std::vector<std::string>& outputs,
                     std::vector<std::string> warnings) {
  for (const auto& name : outputs) m.outputs.push_back(hash_file(dir / name, dir));
  m.extra["warnings"] = warnings;
  m.finished_at = now(ctx);
  write_manifest(dir, m);
  return {dir, std::move(m), std::move(warnings)};
}

std::vector<std::string> reference_texts(const SimplificationRecord& r) {
  std::vector<std::string> out;
  for (const auto& ref : r.references) out.push_back(ref.text);
  return out;
}

struct Upstream {
  std::vector<SimplificationRecord> records;
  std::map<std::string, const SimplificationRecord*> by_id;
};

Upstream load_dataset(const fs::path& path) {
  Upstream u;
  if (!fs::exists(path)) throw Error("missing " + path.string() + " (run `detect curate` first)");
  u.records = load_records(path);
  for (const auto& r : u.records) u.by_id[r.id] = &r;
  return u;
}

std::vector<llm::SystemOutput> load_outputs(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing " + path.string() + " (run `detect generate` first)");
  try {
    return llm::parse_outputs(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(e.message(), e.line(), path.string());
  }
}

std::vector<llm::PairAggregate> load_aggregates(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing " + path.string() + " (run `detect judge` first)");
  try {
    return llm::parse_aggregates(read_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(e.message(), e.line(), path.string());
  }
}

const SimplificationRecord& record_for(const Upstream& u, const std::string& id, const fs::path& source) {
  const auto it = u.by_id.find(id);
  if (it == u.by_id.end()) throw SchemaError("record '" + id + "' is not in the curated dataset", 0, source.string());
  return *it->second;
}

}  // namespace

// ---- curate ----------------------------------------------------------------------------

CommandResult cmd_curate(const CommandContext& ctx) {
  const auto& cfg = ctx.config.curate;
  if (cfg.input.empty()) throw InvalidArgument("curate: no input file configured (curate.input or --input)");
  const fs::path dir = step_dir(ctx.out_dir, Step::curate);
  RunManifest m = begin(ctx, Step::curate, curate_json(ctx.config), {cfg.input});

  std::vector<SimplificationRecord> records = load_records(cfg.input);
  if (records.empty()) throw InvalidArgument("curate: " + cfg.input.string() + " holds no records");
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw SchemaError("duplicate record id '" + r.id + "'", 0, cfg.input.string());
  }

  std::vector<CandidatePair> pairs;
  for (const auto& r : records) pairs.push_back({r.id, r.complex, r.primary_reference().text});
  const auto embedder = resolve_embedder(cfg.similarity_encoder, ctx.config.embedder);
  const FilterResult filtered = filter_by_similarity(pairs, *embedder, cfg.similarity_threshold);

  std::set<std::string> kept;
  for (const auto& p : filtered.kept) kept.insert(p.pair.id);
  std::vector<SimplificationRecord> accepted;
  for (auto r : records) {
    if (!kept.count(r.id)) continue;
    r.strategy = classify_strategy(r.complex, r.primary_reference().text);
    accepted.push_back(std::move(r));
  }
  if (accepted.empty()) throw InvalidArgument("curate: every pair fell below the similarity threshold");

  SplitResult split = cfg.quotas.empty() ? stratified_split(accepted, cfg.test_fraction, ctx.config.seed)
                                         : quota_split(accepted, cfg.quotas, ctx.config.seed);
  std::map<std::string, SplitAssignment> assignment;
  for (const auto& r : split.train) assignment[r.id] = SplitAssignment::train;
  for (const auto& r : split.test) assignment[r.id] = SplitAssignment::test;
  for (auto& r : accepted) r.split = assignment.at(r.id);  // keep input order

  std::string rejected;
  auto add_rejected = [&](const ScoredPair& p, const char* reason) {
    nlohmann::ordered_json j;
    j["id"] = p.pair.id;
    j["reason"] = reason;
    j["score"] = p.score;
    j["error"] = p.error;
    j["complex"] = p.pair.complex;
    j["simplification"] = p.pair.simplification;
    rejected += j.dump() + "\n";
  };
  for (const auto& p : filtered.rejected) add_rejected(p, "below_threshold");
  for (const auto& p : filtered.failed) add_rejected(p, "embedding_failed");

  save_records(accepted, dir / kDataset);
  write_file_atomic(dir / kRejected, rejected);
  m.extra["counts"] = {{"input", records.size()},
                       {"kept", accepted.size()},
                       {"rejected", filtered.rejected.size()},
                       {"failed", filtered.failed.size()},
                       {"train", split.train.size()},
                       {"test", split.test.size()}};
  return finish(ctx, dir, std::move(m), {kDataset, kRejected}, split.warnings);
}

// ---- generate --------------------------------------------------------------------------

CommandResult cmd_generate(const CommandContext& ctx) {
  const auto& cfg = ctx.config.generate;
  const fs::path dir = step_dir(ctx.out_dir, Step::generate);
  const fs::path dataset = step_dir(ctx.out_dir, Step::curate) / kDataset;
  std::vector<fs::path> inputs{dataset};
  if (!cfg.few_shot_file.empty()) inputs.push_back(cfg.few_shot_file);
  RunManifest m = begin(ctx, Step::generate, generate_json(ctx.config), inputs);

  const Upstream up = load_dataset(dataset);
  std::vector<SimplificationRecord> selected;
  for (const auto& r : up.records) {
    if (cfg.subset == "all" || to_string(r.split) == cfg.subset) selected.push_back(r);
  }
  llm::ClientList clients;
  for (const auto& e : cfg.endpoints) clients.push_back(client_for(ctx, e));

  llm::GenerationOptions options;
  options.concurrency = cfg.concurrency;
  options.seed = ctx.config.seed;
  if (!cfg.few_shot_file.empty()) options.five_shot = text::trim(read_file(cfg.few_shot_file));
  const auto& tmpl = llm::ats_generation_template();
  const llm::GenerationResult result = llm::generate_simplifications(selected, clients, tmpl, options);

  std::string failures;
  for (const auto& f : result.failures) {
    nlohmann::ordered_json j;
    j["record_id"] = f.record_id;
    j["system_id"] = f.system_id;
    j["error"] = f.error;
    failures += j.dump() + "\n";
  }
  write_file_atomic(dir / kOutputs, llm::serialize_outputs(result.outputs));
  write_file_atomic(dir / kFailures, failures);
  m.extra["prompt"] = {{"template", "ats_generation"}, {"version", tmpl.version}, {"sha256", tmpl.checksum()},
                       {"few_shot_sha256", sha256_hex(options.five_shot.empty() ? llm::default_few_shot_block() : options.five_shot)}};
  m.extra["counts"] = {{"records", selected.size()}, {"outputs", result.outputs.size()}, {"failures", result.failures.size()}};
  std::vector<std::string> warnings = result.warnings;
  if (!result.failures.empty()) warnings.push_back(std::to_string(result.failures.size()) + " generation requests failed");
  return finish(ctx, dir, std::move(m), {kOutputs, kFailures}, std::move(warnings));
}

// ---- judge -----------------------------------------------------------------------------

CommandResult cmd_judge(const CommandContext& ctx) {
  const auto& cfg = ctx.config.judge;
  if (cfg.endpoints.empty()) throw InvalidArgument("judge: no judge endpoints configured");
  const fs::path dir = step_dir(ctx.out_dir, Step::judge);
  const fs::path dataset = step_dir(ctx.out_dir, Step::curate) / kDataset;
  const fs::path outputs_path = step_dir(ctx.out_dir, Step::generate) / kOutputs;
  RunManifest m = begin(ctx, Step::judge, judge_json(ctx.config), {dataset, outputs_path});

  const Upstream up = load_dataset(dataset);
  std::vector<llm::JudgePair> pairs;
  for (const auto& o : load_outputs(outputs_path)) {
    pairs.push_back({o.record_id, o.system_id, record_for(up, o.record_id, outputs_path).complex, o.text});
  }
  llm::ClientList judges;
  for (const auto& e : cfg.endpoints) judges.push_back(client_for(ctx, e));
  const auto& tmpl = llm::judge_final_template();
  const auto samples = llm::run_judges(pairs, judges, tmpl, {cfg.n_runs, cfg.concurrency, ctx.config.seed});
  const auto aggregates = llm::aggregate(samples);

  write_file_atomic(dir / kSamples, llm::serialize_samples(samples));
  write_file_atomic(dir / kAggregates, llm::serialize_aggregates(aggregates));
  const auto failed = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const llm::JudgeSample& s) { return !s.parse_ok; }));
  const auto unscored = static_cast<std::size_t>(
      std::count_if(aggregates.begin(), aggregates.end(), [](const llm::PairAggregate& a) { return !a.scored(); }));
  m.extra["prompt"] = {{"template", "judge_final"}, {"version", tmpl.version}, {"sha256", tmpl.checksum()}};
  m.extra["counts"] = {{"pairs", pairs.size()}, {"samples", samples.size()}, {"parse_failures", failed}, {"unscored_pairs", unscored}};
  std::vector<std::string> warnings;
  if (failed) warnings.push_back(std::to_string(failed) + " judge samples could not be parsed");
  if (unscored) warnings.push_back(std::to_string(unscored) + " pairs have no parsed judge score");
  return finish(ctx, dir, std::move(m), {kSamples, kAggregates}, std::move(warnings));
}

// ---- train -----------------------------------------------------------------------------

namespace {

struct Example {
  const SimplificationRecord* record;
  std::string simplification;
  llm::CriterionScores target;
};

model::Dataset featurize(const std::vector<Example>& examples, const EmbeddingProvider& embedder) {
  model::Dataset d;
  d.features.resize(examples.size());
  d.targets.resize(examples.size());
  for_each_index(examples.size(), embedder.thread_safe() ? hardware_threads() : 1, [&](std::size_t i) {
    const auto& e = examples[i];
    d.features[i] = model::build_features(e.record->complex, e.simplification, reference_texts(*e.record), embedder);
    d.targets[i] = e.target;
  });
  return d;
}

}  // namespace

CommandResult cmd_train(const CommandContext& ctx) {
  const auto& cfg = ctx.config.train;
  const fs::path dir = step_dir(ctx.out_dir, Step::train);
  const fs::path dataset = step_dir(ctx.out_dir, Step::curate) / kDataset;
  const fs::path outputs_path = step_dir(ctx.out_dir, Step::generate) / kOutputs;
  const fs::path aggregates_path = step_dir(ctx.out_dir, Step::judge) / kAggregates;
  RunManifest m = begin(ctx, Step::train, train_json(ctx.config), {dataset, outputs_path, aggregates_path});

  const Upstream up = load_dataset(dataset);
  std::map<std::pair<std::string, std::string>, std::string> texts;
  for (const auto& o : load_outputs(outputs_path)) texts[{o.record_id, o.system_id}] = o.text;

  // Validation records are drawn from the training split by record, so no record's outputs
  // land on both sides.
  std::vector<std::string> train_ids;
  for (const auto& r : up.records) {
    if (r.split == SplitAssignment::train) train_ids.push_back(r.id);
  }
  std::sort(train_ids.begin(), train_ids.end());
  if (train_ids.size() < 2) throw InvalidArgument("train: need at least 2 training-split records");
  SplitMix64 rng(ctx.config.seed ^ 0x7a11da7eULL);
  for (std::size_t i = train_ids.size(); i > 1; --i) std::swap(train_ids[i - 1], train_ids[rng.below(i)]);
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(train_ids.size()))), 1,
      train_ids.size() - 1);
  const std::set<std::string> val_ids(train_ids.begin(), train_ids.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::vector<Example> train_examples, val_examples;
  std::size_t skipped = 0;
  for (const auto& a : load_aggregates(aggregates_path)) {
    const auto& record = record_for(up, a.record_id, aggregates_path);
    if (record.split != SplitAssignment::train) continue;
    const auto text = texts.find({a.record_id, a.system_id});
    if (!a.scored() || text == texts.end()) {
      ++skipped;
      continue;
    }
    (val_ids.count(a.record_id) ? val_examples : train_examples).push_back({&record, text->second, *a.llm_judge});
  }
  if (train_examples.empty() || val_examples.empty()) {
    throw InvalidArgument("train: no scored training or validation pairs (run `detect judge` on the training split)");
  }

  model::MetricModelConfig mc = cfg.model;
  mc.seed = ctx.config.seed;
  const auto embedder = resolve_embedder(mc.encoder_id, ctx.config.embedder);
  const model::Dataset train_set = featurize(train_examples, *embedder);
  const model::Dataset val_set = featurize(val_examples, *embedder);
  const model::TrainResult result = model::train(train_set, val_set, mc, embedder);

  std::string history;
  for (const auto& e : result.history) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    for (std::size_t c = 0; c < 3; ++c) {
      const std::string name(llm::to_string(llm::kCriteria[c]));
      j["val_pearson_" + name] = std::isnan(e.val_pearson[c]) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.val_pearson[c]);
      j["val_spearman_" + name] = std::isnan(e.val_spearman[c]) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.val_spearman[c]);
    }
    j["val_pearson_mean"] = std::isnan(e.mean_pearson) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.mean_pearson);
    j["val_spearman_mean"] = std::isnan(e.mean_spearman) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.mean_spearman);
    j["best"] = e.epoch == result.best_epoch;
    history += j.dump() + "\n";
  }
  write_file_atomic(dir / kHistory, history);

  nlohmann::json lineage;
  for (const auto& in : m.inputs) lineage["data"][in.path] = in.sha256;
  lineage["judge_prompt_sha256"] = llm::judge_final_template().checksum();
  lineage["train_pairs"] = train_set.size();
  lineage["validation_pairs"] = val_set.size();
  lineage["best_epoch"] = result.best_epoch;
  result.model.save(dir / kModelDir, lineage);

  m.extra["counts"] = {{"train_pairs", train_set.size()}, {"validation_pairs", val_set.size()}, {"skipped_pairs", skipped}};
  m.extra["best_epoch"] = result.best_epoch;
  m.extra["initial_loss"] = result.initial_loss;
  m.extra["final_loss"] = result.final_loss;
  m.extra["optimizer"] = {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"batch_size", mc.batch_size}};
  std::vector<std::string> warnings;
  if (skipped) warnings.push_back(std::to_string(skipped) + " training pairs skipped (unscored or missing output)");
  return finish(ctx, dir, std::move(m),
                {kHistory, "model/weights.bin", "model/config.json", "model/calibration.json", "model/manifest.json"},
                std::move(warnings));
}

// ---- evaluate --------------------------------------------------------------------------

nlohmann::json alpha_summary(const std::vector<AnnotationRecord>& ratings) {
  nlohmann::json out = nlohmann::json::object();
  auto one = [&](std::optional<llm::Criterion> c) -> nlohmann::json {
    if (ratings.empty()) return nullptr;
    try {
      return stats::krippendorff_alpha_interval(rater_matrix(ratings, c).matrix);
    } catch (const DegenerateInput&) {
      return nullptr;
    }
  };
  for (llm::Criterion c : llm::kCriteria) out[std::string(llm::to_string(c))] = one(c);
  out["total"] = one(std::nullopt);
  return out;
}

std::map<RatingItem, llm::CriterionScores> mean_by_item(const std::vector<AnnotationRecord>& ratings) {
  std::map<RatingItem, std::vector<const AnnotationRecord*>> grouped;
  for (const auto& a : ratings) grouped[{a.record_id, a.system_id}].push_back(&a);
  std::map<RatingItem, llm::CriterionScores> out;
  for (const auto& [item, list] : grouped) {
    llm::CriterionScores s;
    for (llm::Criterion c : llm::kCriteria) {
      std::vector<double> v;
      for (const auto* a : list) v.push_back(a->scores[c]);
      std::sort(v.begin(), v.end());
      s[c] = stats::mean(v);
    }
    out.emplace(item, s);
  }
  return out;
}

std::vector<AnnotationRecord> judge_ratings(const std::vector<llm::PairAggregate>& aggregates) {
  std::vector<AnnotationRecord> out;
  for (const auto& a : aggregates) {
    for (const auto& [judge, summary] : a.judges) {
      AnnotationRecord r;
      r.annotator_id = judge;
      r.record_id = a.record_id;
      r.system_id = a.system_id;
      r.scores = summary.mean;
      out.push_back(std::move(r));
    }
  }
  return out;
}

CommandResult cmd_evaluate(const CommandContext& ctx) {
  const auto& cfg = ctx.config.evaluate;
  const fs::path dir = step_dir(ctx.out_dir, Step::evaluate);
  const fs::path dataset = step_dir(ctx.out_dir, Step::curate) / kDataset;
  const fs::path outputs_path = step_dir(ctx.out_dir, Step::generate) / kOutputs;
  const fs::path aggregates_path = step_dir(ctx.out_dir, Step::judge) / kAggregates;
  const fs::path model_dir = step_dir(ctx.out_dir, Step::train) / kModelDir;
  if (!fs::exists(model_dir / "weights.bin")) {
    throw Error("evaluate: no trained model at " + model_dir.string() + " (run `detect train` first)");
  }
  std::vector<fs::path> inputs{dataset, outputs_path, aggregates_path, model_dir / "weights.bin"};
  if (!cfg.human_annotations.empty()) inputs.push_back(cfg.human_annotations);
  RunManifest m = begin(ctx, Step::evaluate, evaluate_json(ctx.config), inputs);

  const Upstream up = load_dataset(dataset);
  const auto outputs = load_outputs(outputs_path);
  const auto aggregates = load_aggregates(aggregates_path);
  const model::MetricModel detect_model = model::MetricModel::load(model_dir, ctx.config.embedder);
  const auto bert = resolve_embedder(cfg.bertscore_encoder, ctx.config.embedder);
  std::vector<AnnotationRecord> human;
  if (!cfg.human_annotations.empty()) human = load_annotations(cfg.human_annotations);

  std::map<RatingItem, const llm::PairAggregate*> llm_scores;
  std::vector<llm::PairAggregate> test_aggregates;
  for (const auto& a : aggregates) llm_scores[{a.record_id, a.system_id}] = &a;

  std::vector<const llm::SystemOutput*> test_outputs;
  for (const auto& o : outputs) {
    if (record_for(up, o.record_id, outputs_path).split == SplitAssignment::test) test_outputs.push_back(&o);
  }
  if (test_outputs.empty()) throw InvalidArgument("evaluate: no system outputs for test-split records");

  std::set<RatingItem> test_items;
  for (const auto* o : test_outputs) test_items.insert({o->record_id, o->system_id});
  std::vector<AnnotationRecord> human_test;
  for (const auto& a : human) {
    if (test_items.count({a.record_id, a.system_id})) human_test.push_back(a);
  }
  const auto human_means = mean_by_item(human_test);

  std::vector<EvalRow> rows(test_outputs.size());
  const bool parallel = detect_model.embedder().thread_safe() && bert->thread_safe();
  for_each_index(rows.size(), parallel ? hardware_threads() : 1, [&](std::size_t i) {
    const auto& o = *test_outputs[i];
    const auto& record = record_for(up, o.record_id, outputs_path);
    const auto refs = reference_texts(record);
    EvalRow& row = rows[i];
    row.record_id = o.record_id;
    row.system_id = o.system_id;
    row.strategy = classify_strategy(record.complex, o.text);
    auto put = [&](Source s, const llm::CriterionScores& v) {
      for (std::size_t c = 0; c < 3; ++c) row.at(s, c) = v[llm::kCriteria[c]];
      row.at(s, 3) = llm::total_score(v);
    };
    auto put_single = [&](Source s, double v) {
      for (std::size_t c = 0; c < kEvalCriteria; ++c) row.at(s, c) = v;
    };
    if (const auto it = llm_scores.find({o.record_id, o.system_id}); it != llm_scores.end() && it->second->scored()) {
      put(Source::llm, *it->second->llm_judge);
    }
    if (const auto it = human_means.find({o.record_id, o.system_id}); it != human_means.end()) put(Source::human, it->second);
    const model::ScoreResult detect_score = detect_model.score(record.complex, o.text, refs);
    put(Source::detect, detect_score.scores);
    put_single(Source::bleu, bleu(o.text, refs).reported());
    put_single(Source::sari, sari(record.complex, o.text, refs).reported());
    put_single(Source::bertscore, bertscore_precision(o.text, refs, *bert).reported());
  });

  const auto cells = correlation_report(rows, cfg.permutations, ctx.config.seed);
  write_file_atomic(dir / "report.csv", report_csv(cells));

  std::string scores;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["record_id"] = row.record_id;
    j["system_id"] = row.system_id;
    j["strategy"] = to_string(row.strategy);
    for (Source s : kSources) {
      nlohmann::ordered_json per;
      bool any = false;
      for (std::size_t c = 0; c < kEvalCriteria; ++c) {
        const double v = row.at(s, c);
        per[std::string(criterion_name(c))] = std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
        any = any || !std::isnan(v);
      }
      if (any) j[std::string(to_string(s))] = per;
    }
    scores += j.dump() + "\n";
  }
  write_file_atomic(dir / "scores.jsonl", scores);

  std::vector<llm::PairAggregate> judged_test;
  for (const auto& a : aggregates) {
    if (test_items.count({a.record_id, a.system_id})) judged_test.push_back(a);
  }
  nlohmann::ordered_json sidecar;
  sidecar["run_id"] = m.run_id;
  sidecar["rows"] = rows.size();
  sidecar["columns"] = {"comparison", "criterion", "pearson_r", "pearson_p", "spearman_rho", "spearman_p", "n", "strategy_subset"};
  sidecar["p_values"] = cfg.permutations > 0 ? "permutation" : "t_approximation";
  sidecar["permutations"] = cfg.permutations;
  sidecar["strategy_subsets"] = "classified from (complex, system output)";
  sidecar["krippendorff_alpha"] = {{"metric", "interval"},
                                   {"human", alpha_summary(human_test)},
                                   {"llm_judges", alpha_summary(judge_ratings(judged_test))}};
  sidecar["model"] = model::to_json(detect_model.config());
  sidecar["bertscore_encoder"] = bert->model_id();
  write_file_atomic(dir / "report.json", sidecar.dump(2) + "\n");

  m.extra["counts"] = {{"rows", rows.size()}, {"human_ratings", human_test.size()}};
  std::vector<std::string> warnings;
  if (human.empty()) warnings.push_back("no human annotations given; Human comparisons omitted");
  return finish(ctx, dir, std::move(m), {"report.csv", "report.json", "scores.jsonl"}, std::move(warnings));
}

// ---- report ----------------------------------------------------------------------------

CommandResult cmd_report(const CommandContext& ctx) {
  const fs::path dir = step_dir(ctx.out_dir, Step::report);
  const fs::path dataset = step_dir(ctx.out_dir, Step::curate) / kDataset;
  const fs::path samples_path = step_dir(ctx.out_dir, Step::judge) / kSamples;
  std::vector<fs::path> inputs{dataset};
  const bool have_samples = fs::exists(samples_path);
  if (have_samples) inputs.push_back(samples_path);
  RunManifest m = begin(ctx, Step::report, nlohmann::json::object(), inputs);

  const Upstream up = load_dataset(dataset);
  std::vector<std::string> outputs;
  for (SplitAssignment subset : {SplitAssignment::train, SplitAssignment::test}) {
    std::vector<SimplificationRecord> part;
    for (const auto& r : up.records) {
      if (r.split == subset) part.push_back(r);
    }
    if (part.empty()) continue;
    const std::string name = "lexical_stats_" + std::string(to_string(subset)) + ".csv";
    write_file_atomic(dir / name, lexical_table_csv(lexical_table(part)));
    outputs.push_back(name);
  }
  write_file_atomic(dir / "strategy_counts.csv", strategy_counts_csv(strategy_counts(up.records)));
  outputs.push_back("strategy_counts.csv");
  std::vector<std::string> warnings;
  if (have_samples) {
    const auto samples = llm::parse_samples(read_file(samples_path));
    write_file_atomic(dir / "judge_selection.csv", judge_selection_csv(judge_selection(samples)));
    outputs.push_back("judge_selection.csv");
  } else {
    warnings.push_back("no judge samples; judge selection table skipped");
  }
  return finish(ctx, dir, std::move(m), outputs, std::move(warnings));
}

// ---- serve / score ---------------------------------------------------------------------

void cmd_serve(const CommandContext& ctx) {
  const auto& cfg = ctx.config.serve;
  const Upstream up = load_dataset(step_dir(ctx.out_dir, Step::curate) / kDataset);
  std::vector<SimplificationRecord> records;
  for (const auto& r : up.records) {
    if (cfg.subset == "all" || to_string(r.split) == cfg.subset) records.push_back(r);
  }
  const auto outputs = load_outputs(step_dir(ctx.out_dir, Step::generate) / kOutputs);
  const fs::path journal = cfg.journal.empty() ? step_dir(ctx.out_dir, Step::annotate) / "journal.jsonl" : cfg.journal;
  AnnotationStore store(journal, cfg.compact_every);
  AnnotationApi api(store, build_tasks(records, outputs), cfg.batch_size);
  httplib::Server server;
  api.mount(server);
  if (!server.bind_to_port(cfg.host, cfg.port)) {
    throw Error("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
  }
  std::fprintf(stderr, "serving %zu tasks on http://%s:%d/v1/ (journal %s)\n", api.tasks().size(), cfg.host.c_str(),
               cfg.port, journal.string().c_str());
  server.listen_after_bind();
}

nlohmann::json cmd_score(const fs::path& model_dir, const EmbedderOptions& embedder, const std::string& complex,
                         const std::string& simplification, const std::vector<std::string>& references) {
  const model::MetricModel m = model::MetricModel::load(model_dir, embedder);
  const model::ScoreResult r = m.score(complex, simplification, references);
  return {{"scores", llm::scores_to_json(r.scores)}, {"total", r.total}, {"raw", r.raw}};
}

}  // namespace detect::service
