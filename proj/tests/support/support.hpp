#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "detect/corpus.hpp"
#include "detect/hashing.hpp"
#include "detect/llm/chat.hpp"
#include "detect/service/commands.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "detect") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string> kSubjects = {"Die Stadtverwaltung", "Der Gemeinderat", "Das Institut",
                                                   "Die Regierung", "Der Verein", "Die Universität"};
inline const std::vector<std::string> kObjects = {"umfangreiche Sanierungsmaßnahmen", "eine neue Verkehrsregelung",
                                                  "den Ausbau der Radwege", "langfristige Klimaschutzprogramme"};

// A record whose primary reference classifies as `strategy`; `i` varies the wording.
inline detect::SimplificationRecord make_record(const std::string& id, detect::MatchType match,
                                                detect::Strategy strategy, std::size_t i) {
  using namespace detect;
  const std::string& s = kSubjects[i % kSubjects.size()];
  const std::string& o = kObjects[(i / kSubjects.size()) % kObjects.size()];
  SimplificationRecord r;
  r.id = id;
  r.complex = s + " beschloss am Montag " + o + ", nachdem es zahlreiche Beschwerden gegeben hatte.";
  std::string simple;
  switch (strategy) {
    case Strategy::split: simple = s + " hat " + o + " beschlossen. Vorher gab es viele Beschwerden."; break;
    case Strategy::del: simple = s + " beschloss " + o + "."; break;
    case Strategy::paraphrase:
      simple = "Am Montag hat " + s + " wegen sehr vieler Beschwerden ganz offiziell " + o + " beschlossen.";
      break;
  }
  const std::string b1 = s + " hat am Montag " + o + " beschlossen, weil es viele Beschwerden gab.";
  r.match_type = match;
  switch (match) {
    case MatchType::complex_b1_a2: r.references = {{CefrLevel::B1, b1}, {CefrLevel::A2, simple}}; break;
    case MatchType::complex_b1: r.references = {{CefrLevel::B1, simple}}; break;
    case MatchType::b1_a2:
    case MatchType::complex_a2: r.references = {{CefrLevel::A2, simple}}; break;
  }
  return r;
}

// Per-cell (train, test) counts of the released dataset's strategy table.
struct PublishedCell {
  detect::MatchType match;
  detect::Strategy strategy;
  std::size_t train;
  std::size_t test;
};

inline std::vector<PublishedCell> published_cells() {
  using detect::MatchType;
  using detect::Strategy;
  return {
      {MatchType::complex_b1_a2, Strategy::del, 5, 4},  {MatchType::complex_b1, Strategy::del, 5, 3},
      {MatchType::b1_a2, Strategy::del, 3, 2},          {MatchType::complex_a2, Strategy::del, 5, 3},
      {MatchType::complex_b1_a2, Strategy::paraphrase, 15, 7}, {MatchType::complex_b1, Strategy::paraphrase, 12, 9},
      {MatchType::b1_a2, Strategy::paraphrase, 24, 14}, {MatchType::complex_a2, Strategy::paraphrase, 4, 2},
      {MatchType::complex_b1_a2, Strategy::split, 6, 3}, {MatchType::complex_b1, Strategy::split, 5, 3},
      {MatchType::b1_a2, Strategy::split, 14, 9},       {MatchType::complex_a2, Strategy::split, 2, 1},
  };
}

// 160 records laid out like the released dataset's cells.
inline std::vector<detect::SimplificationRecord> published_shaped_corpus() {
  std::vector<detect::SimplificationRecord> out;
  std::size_t i = 0;
  for (const auto& c : published_cells()) {
    for (std::size_t k = 0; k < c.train + c.test; ++k, ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "p%03zu", i);
      out.push_back(make_record(id, c.match, c.strategy, i));
    }
  }
  return out;
}

inline detect::llm::ChatEndpoint mock_endpoint(const std::string& name) {
  detect::llm::ChatEndpoint e;
  e.name = name;
  e.base_url = "mock://" + name;
  e.model_id = name;
  return e;
}

// Small end-to-end pipeline config on mock endpoints; `input` is a raw corpus JSONL.
inline detect::service::PipelineConfig mock_pipeline(const std::filesystem::path& input, std::uint64_t seed) {
  detect::service::PipelineConfig c;
  c.seed = seed;
  c.curate.input = input;
  c.generate.endpoints = {mock_endpoint("gen-a"), mock_endpoint("gen-b")};
  c.judge.endpoints = {mock_endpoint("judge-a"), mock_endpoint("judge-b"), mock_endpoint("judge-c")};
  c.judge.n_runs = 1;
  return c;
}

inline std::string fixed_clock() { return "2024-01-01T00:00:00Z"; }

}  // namespace testing
