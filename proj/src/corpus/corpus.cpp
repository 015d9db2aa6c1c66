#include "detect/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "detect/classic_metrics.hpp"
#include "detect/embedding.hpp"
#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/io.hpp"
#include "detect/text.hpp"

namespace detect {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::split: return "split";
    case Strategy::del: return "delete";
    case Strategy::paraphrase: return "paraphrase";
  }
  return "?";
}

std::string_view to_string(CefrLevel l) { return l == CefrLevel::B1 ? "B1" : "A2"; }

std::string_view to_string(MatchType m) {
  switch (m) {
    case MatchType::complex_b1_a2: return "Complex-B1-A2";
    case MatchType::complex_b1: return "Complex-B1";
    case MatchType::b1_a2: return "B1-A2";
    case MatchType::complex_a2: return "Complex-A2";
  }
  return "?";
}

std::string_view to_string(SplitAssignment s) {
  switch (s) {
    case SplitAssignment::train: return "train";
    case SplitAssignment::test: return "test";
    case SplitAssignment::unassigned: return "unassigned";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "split") return Strategy::split;
  if (s == "delete") return Strategy::del;
  if (s == "paraphrase") return Strategy::paraphrase;
  throw InvalidArgument("unknown strategy '" + std::string(s) + "'");
}

CefrLevel parse_level(std::string_view s) {
  if (s == "B1") return CefrLevel::B1;
  if (s == "A2") return CefrLevel::A2;
  throw InvalidArgument("unknown CEFR level '" + std::string(s) + "'");
}

MatchType parse_match_type(std::string_view s) {
  for (auto m : {MatchType::complex_b1_a2, MatchType::complex_b1, MatchType::b1_a2, MatchType::complex_a2}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown match type '" + std::string(s) + "'");
}

const Reference* SimplificationRecord::reference(CefrLevel level) const {
  for (const auto& r : references) {
    if (r.level == level) return &r;
  }
  return nullptr;
}

const Reference& SimplificationRecord::primary_reference() const {
  if (const auto* a2 = reference(CefrLevel::A2)) return *a2;
  if (const auto* b1 = reference(CefrLevel::B1)) return *b1;
  throw SchemaError("record '" + id + "' has no references");
}

void validate(const SimplificationRecord& r) {
  if (r.id.empty()) throw SchemaError("record id is empty");
  if (text::trim(r.complex).empty()) throw SchemaError("record '" + r.id + "': complex text is empty");
  if (r.references.empty()) throw SchemaError("record '" + r.id + "': references must be non-empty");
  const bool b1 = r.reference(CefrLevel::B1) != nullptr;
  const bool a2 = r.reference(CefrLevel::A2) != nullptr;
  if (r.references.size() != static_cast<std::size_t>(b1) + static_cast<std::size_t>(a2)) {
    throw SchemaError("record '" + r.id + "': at most one reference per level");
  }
  for (const auto& ref : r.references) {
    if (text::trim(ref.text).empty()) throw SchemaError("record '" + r.id + "': empty reference text");
  }
  bool consistent = false;
  switch (r.match_type) {
    case MatchType::complex_b1_a2: consistent = b1 && a2; break;
    case MatchType::complex_b1: consistent = b1 && !a2; break;
    case MatchType::complex_a2:
    case MatchType::b1_a2: consistent = a2 && !b1; break;
  }
  if (!consistent) {
    throw SchemaError("record '" + r.id + "': match type " + std::string(to_string(r.match_type)) +
                      " inconsistent with reference levels");
  }
  if (r.strategy) {
    const Strategy expected = classify_strategy(r.complex, r.primary_reference().text);
    if (*r.strategy != expected) {
      throw SchemaError("record '" + r.id + "': cached strategy " + std::string(to_string(*r.strategy)) +
                        " != recomputed " + std::string(to_string(expected)));
    }
  }
}

Strategy classify_strategy(std::string_view complex, std::string_view simplification) {
  if (text::trim(complex).empty() || text::trim(simplification).empty()) {
    throw InvalidArgument("classify_strategy: texts must not be empty");
  }
  // Ratio tests on counts (s_out / s_in > 1, w_out / w_in < 1) compared without dividing, so
  // punctuation-only text (0 words, 0 sentences) still gets a label.
  if (text::count_sentences(simplification) > text::count_sentences(complex)) return Strategy::split;
  if (text::tokenize_words(simplification).size() < text::tokenize_words(complex).size()) return Strategy::del;
  return Strategy::paraphrase;
}

LexicalStats lexical_stats(std::string_view s) {
  const auto words = text::tokenize_words(s);
  if (words.empty()) throw InvalidArgument("lexical_stats: text has no words");
  std::size_t chars = 0;
  for (const auto& w : words) chars += text::utf8_length(w);
  return {words.size(), static_cast<double>(chars) / static_cast<double>(words.size()), text::count_sentences(s)};
}

namespace {

using CellKey = std::pair<MatchType, Strategy>;

std::map<CellKey, std::vector<SimplificationRecord>> group_cells(std::vector<SimplificationRecord> records) {
  std::map<CellKey, std::vector<SimplificationRecord>> cells;
  for (auto& r : records) {
    if (!r.strategy) r.strategy = classify_strategy(r.complex, r.primary_reference().text);
    cells[{r.match_type, *r.strategy}].push_back(std::move(r));
  }
  for (auto& [key, members] : cells) {
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  return cells;
}

std::uint64_t cell_seed(std::uint64_t seed, const CellKey& key) {
  const std::string tag = std::string(to_string(key.first)) + "/" + std::string(to_string(key.second));
  return fnv1a64(tag) ^ (seed * 0x9e3779b97f4a7c15ULL);
}

void shuffle(std::vector<SimplificationRecord>& v, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

SplitResult assign(std::map<CellKey, std::vector<SimplificationRecord>> cells,
                   const std::map<CellKey, std::size_t>& quota, std::uint64_t seed) {
  SplitResult out;
  for (auto& [key, members] : cells) {
    shuffle(members, cell_seed(seed, key));
    std::size_t want = 0;
    if (auto it = quota.find(key); it != quota.end()) want = it->second;
    if (want > members.size()) {
      out.warnings.push_back("cell " + std::string(to_string(key.first)) + "/" + std::string(to_string(key.second)) +
                             " has " + std::to_string(members.size()) + " records but " + std::to_string(want) +
                             " test records were requested; using all of them");
      want = members.size();
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto& r = members[i];
      r.split = i < want ? SplitAssignment::test : SplitAssignment::train;
      (i < want ? out.test : out.train).push_back(std::move(r));
    }
  }
  for (const auto& [key, want] : quota) {
    if (want > 0 && !cells.count(key)) {
      out.warnings.push_back("cell " + std::string(to_string(key.first)) + "/" + std::string(to_string(key.second)) +
                             " is empty; skipped");
    }
  }
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::sort(out.train.begin(), out.train.end(), by_id);
  std::sort(out.test.begin(), out.test.end(), by_id);
  return out;
}

}  // namespace

SplitResult stratified_split(std::vector<SimplificationRecord> records, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw InvalidArgument("test_fraction must be in [0,1]");
  const std::size_t n = records.size();
  auto cells = group_cells(std::move(records));

  // Largest-remainder apportionment of round(f * n) test slots.
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::map<CellKey, std::size_t> quota;
  std::vector<std::pair<double, CellKey>> remainders;
  std::size_t assigned = 0;
  for (const auto& [key, members] : cells) {
    const double exact = test_fraction * static_cast<double>(members.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quota[key] = base;
    assigned += base;
    remainders.emplace_back(exact - static_cast<double>(base), key);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) {
    ++quota[remainders[i].second];
  }
  return assign(std::move(cells), quota, seed);
}

SplitResult quota_split(std::vector<SimplificationRecord> records, const std::vector<CellQuota>& quotas,
                        std::uint64_t seed) {
  std::map<CellKey, std::size_t> quota;
  for (const auto& q : quotas) quota[{q.match_type, q.strategy}] = q.test_count;
  return assign(group_cells(std::move(records)), quota, seed);
}

FilterResult filter_by_similarity(const std::vector<CandidatePair>& pairs, const EmbeddingProvider& embedder,
                                  double threshold) {
  FilterResult out;
  for (const auto& p : pairs) {
    ScoredPair scored{p, 0.0, {}};
    try {
      scored.score = bertscore_precision(p.simplification, {p.complex}, embedder).value;
    } catch (const std::exception& e) {
      scored.error = e.what();
      out.failed.push_back(std::move(scored));
      continue;
    }
    (scored.score >= threshold ? out.kept : out.rejected).push_back(std::move(scored));
  }
  return out;
}

nlohmann::ordered_json to_json(const SimplificationRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["complex"] = r.complex;
  auto refs = nlohmann::ordered_json::array();
  for (const auto& ref : r.references) {
    refs.push_back(nlohmann::ordered_json{{"level", std::string(to_string(ref.level))}, {"text", ref.text}});
  }
  j["references"] = std::move(refs);
  j["match_type"] = std::string(to_string(r.match_type));
  j["strategy"] = r.strategy ? nlohmann::ordered_json(std::string(to_string(*r.strategy))) : nlohmann::ordered_json();
  j["split"] = r.split == SplitAssignment::unassigned ? nlohmann::ordered_json()
                                                      : nlohmann::ordered_json(std::string(to_string(r.split)));
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j;
}

SimplificationRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw SchemaError("expected a JSON object", line);
  auto need_string = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"", line);
    if (!j[key].is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string", line);
    return j[key].get<std::string>();
  };
  SimplificationRecord r;
  try {
    r.id = need_string("id");
    r.complex = need_string("complex");
    if (!j.contains("references") || !j["references"].is_array()) {
      throw SchemaError("missing or non-array field \"references\"", line);
    }
    for (const auto& ref : j["references"]) {
      if (!ref.is_object() || !ref.contains("level") || !ref.contains("text") || !ref["level"].is_string() ||
          !ref["text"].is_string()) {
        throw SchemaError("reference entries need string \"level\" and \"text\"", line);
      }
      r.references.push_back({parse_level(ref["level"].get<std::string>()), ref["text"].get<std::string>()});
    }
    r.match_type = parse_match_type(need_string("match_type"));
    if (j.contains("strategy") && !j["strategy"].is_null()) {
      if (!j["strategy"].is_string()) throw SchemaError("field \"strategy\" must be a string or null", line);
      r.strategy = parse_strategy(j["strategy"].get<std::string>());
    }
    if (j.contains("split") && !j["split"].is_null()) {
      const std::string s = j["split"].is_string() ? j["split"].get<std::string>() : "";
      if (s == "train") {
        r.split = SplitAssignment::train;
      } else if (s == "test") {
        r.split = SplitAssignment::test;
      } else {
        throw SchemaError("field \"split\" must be \"train\", \"test\" or null", line);
      }
    }
    for (const auto& [k, v] : j.items()) {
      if (k != "id" && k != "complex" && k != "references" && k != "match_type" && k != "strategy" && k != "split") {
        r.extra[k] = v;
      }
    }
    validate(r);
  } catch (const SchemaError& e) {
    if (e.line() == 0 && line != 0) throw SchemaError(e.message(), line);
    throw;
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what(), line);
  }
  return r;
}

std::vector<SimplificationRecord> parse_records(std::string_view jsonl) {
  std::vector<SimplificationRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
    const std::string_view line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (text::trim(line).empty()) {
      if (end == jsonl.size()) break;
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    out.push_back(record_from_json(j, line_no));
    if (end == jsonl.size()) break;
  }
  return out;
}

std::vector<SimplificationRecord> load_records(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    return parse_records(data);
  } catch (const SchemaError& e) {
    throw SchemaError(e.message(), e.line(), path.string());
  }
}

std::string serialize_records(const std::vector<SimplificationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_records(const std::vector<SimplificationRecord>& records, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_records(records));
}

}  // namespace detect
