#include "detect/service/config.hpp"

#include "detect/error.hpp"
#include "detect/io.hpp"

namespace detect::service {

namespace {

std::filesystem::path resolve(const nlohmann::json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key) || j.at(key).get<std::string>().empty()) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<llm::ChatEndpoint> endpoints(const nlohmann::json& section) {
  std::vector<llm::ChatEndpoint> out;
  for (const auto& e : section.value("endpoints", nlohmann::json::array())) out.push_back(llm::endpoint_from_json(e));
  return out;
}

nlohmann::json endpoints_json(const std::vector<llm::ChatEndpoint>& v) {
  auto out = nlohmann::json::array();
  for (const auto& e : v) out.push_back(llm::to_json(e));
  return out;
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("embedder")) {
      c.embedder.url = j["embedder"].value("url", c.embedder.url);
      c.embedder.dimension = j["embedder"].value("dimension", c.embedder.dimension);
    }
    if (j.contains("curate")) {
      const auto& s = j["curate"];
      c.curate.input = resolve(s, "input", base_dir);
      c.curate.similarity_encoder = s.value("similarity_encoder", c.curate.similarity_encoder);
      c.curate.similarity_threshold = s.value("similarity_threshold", c.curate.similarity_threshold);
      c.curate.test_fraction = s.value("test_fraction", c.curate.test_fraction);
      for (const auto& q : s.value("quotas", nlohmann::json::array())) {
        c.curate.quotas.push_back({parse_match_type(q.at("match_type").get<std::string>()),
                                   parse_strategy(q.at("strategy").get<std::string>()),
                                   q.at("test_count").get<std::size_t>()});
      }
    }
    if (j.contains("generate")) {
      const auto& s = j["generate"];
      c.generate.endpoints = endpoints(s);
      c.generate.concurrency = s.value("concurrency", c.generate.concurrency);
      c.generate.subset = s.value("subset", c.generate.subset);
      c.generate.few_shot_file = resolve(s, "few_shot_file", base_dir);
    }
    if (j.contains("judge")) {
      const auto& s = j["judge"];
      c.judge.endpoints = endpoints(s);
      c.judge.n_runs = s.value("n_runs", c.judge.n_runs);
      c.judge.concurrency = s.value("concurrency", c.judge.concurrency);
    }
    if (j.contains("train")) {
      const auto& s = j["train"];
      if (s.contains("model")) c.train.model = model::config_from_json(s["model"]);
      c.train.validation_fraction = s.value("validation_fraction", c.train.validation_fraction);
    }
    if (j.contains("evaluate")) {
      const auto& s = j["evaluate"];
      c.evaluate.bertscore_encoder = s.value("bertscore_encoder", c.evaluate.bertscore_encoder);
      c.evaluate.human_annotations = resolve(s, "human_annotations", base_dir);
      c.evaluate.permutations = s.value("permutations", c.evaluate.permutations);
    }
    if (j.contains("serve")) {
      const auto& s = j["serve"];
      c.serve.host = s.value("host", c.serve.host);
      c.serve.port = s.value("port", c.serve.port);
      c.serve.journal = resolve(s, "journal", base_dir);
      c.serve.subset = s.value("subset", c.serve.subset);
      c.serve.batch_size = s.value("batch_size", c.serve.batch_size);
      c.serve.compact_every = s.value("compact_every", c.serve.compact_every);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (c.judge.n_runs == 0) throw InvalidArgument("config: judge.n_runs must be >= 1");
  if (!(c.curate.test_fraction >= 0.0 && c.curate.test_fraction <= 1.0)) {
    throw InvalidArgument("config: curate.test_fraction must be in [0,1]");
  }
  if (!(c.train.validation_fraction > 0.0 && c.train.validation_fraction < 1.0)) {
    throw InvalidArgument("config: train.validation_fraction must be in (0,1)");
  }
  if (c.generate.subset != "all" && c.generate.subset != "train" && c.generate.subset != "test") {
    throw InvalidArgument("config: generate.subset must be all, train or test");
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json curate_json(const PipelineConfig& c) {
  auto quotas = nlohmann::json::array();
  for (const auto& q : c.curate.quotas) {
    quotas.push_back({{"match_type", to_string(q.match_type)}, {"strategy", to_string(q.strategy)}, {"test_count", q.test_count}});
  }
  return {{"similarity_encoder", c.curate.similarity_encoder},
          {"similarity_threshold", c.curate.similarity_threshold},
          {"test_fraction", c.curate.test_fraction},
          {"quotas", quotas}};
}

nlohmann::json generate_json(const PipelineConfig& c) {
  return {{"endpoints", endpoints_json(c.generate.endpoints)}, {"subset", c.generate.subset}};
}

nlohmann::json judge_json(const PipelineConfig& c) {
  return {{"endpoints", endpoints_json(c.judge.endpoints)}, {"n_runs", c.judge.n_runs}};
}

nlohmann::json train_json(const PipelineConfig& c) {
  return {{"model", model::to_json(c.train.model)}, {"validation_fraction", c.train.validation_fraction}};
}

nlohmann::json evaluate_json(const PipelineConfig& c) {
  return {{"bertscore_encoder", c.evaluate.bertscore_encoder},
          {"permutations", c.evaluate.permutations},
          {"human_annotations", !c.evaluate.human_annotations.empty()}};
}

}  // namespace detect::service
