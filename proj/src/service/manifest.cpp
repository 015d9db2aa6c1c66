#include "detect/service/manifest.hpp"

#include <chrono>
#include <ctime>

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/io.hpp"

namespace detect::service {

std::string_view to_string(Step s) {
  switch (s) {
    case Step::curate: return "curate";
    case Step::generate: return "generate";
    case Step::judge: return "judge";
    case Step::train: return "train";
    case Step::evaluate: return "evaluate";
    case Step::report: return "report";
    case Step::annotate: return "annotate";
  }
  return "?";
}

namespace {

Step parse_step(std::string_view s) {
  for (Step st : {Step::curate, Step::generate, Step::judge, Step::train, Step::evaluate, Step::report, Step::annotate}) {
    if (to_string(st) == s) return st;
  }
  throw SchemaError("unknown step '" + std::string(s) + "'");
}

nlohmann::ordered_json hashes_json(const std::vector<FileHash>& v) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& h : v) out.push_back({{"path", h.path}, {"sha256", h.sha256}});
  return out;
}

std::vector<FileHash> hashes_from(const nlohmann::json& j) {
  std::vector<FileHash> out;
  for (const auto& e : j) out.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["run_id"] = m.run_id;
  j["step"] = to_string(m.step);
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["config"] = m.config;
  j["inputs"] = hashes_json(m.inputs);
  j["outputs"] = hashes_json(m.outputs);
  j["extra"] = m.extra;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.step = parse_step(j.at("step").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started_at = j.value("started_at", std::string());
  m.finished_at = j.value("finished_at", std::string());
  m.config = j.value("config", nlohmann::json::object());
  m.inputs = hashes_from(j.at("inputs"));
  m.outputs = hashes_from(j.at("outputs"));
  m.extra = j.value("extra", nlohmann::json::object());
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FileHash hash_file(const std::filesystem::path& path, const std::filesystem::path& base) {
  std::string shown = path.generic_string();
  if (!base.empty()) {
    const auto rel = std::filesystem::relative(path, base);
    if (!rel.empty() && *rel.begin() != "..") shown = rel.generic_string();
  }
  return {shown, sha256_file(path)};
}

std::string derive_run_id(Step step, const nlohmann::json& config, const std::vector<FileHash>& inputs,
                          std::uint64_t seed) {
  // Paths are left out so the same data at another location gets the same id.
  std::string key = std::string(to_string(step)) + '\n' + config.dump() + '\n' + std::to_string(seed) + '\n';
  for (const auto& h : inputs) key += h.sha256 + '\n';
  return std::string(to_string(step)) + "-" + sha256_hex(key).substr(0, 16);
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  write_file_atomic(dir / kManifestName, to_json(m).dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  try {
    return manifest_from_json(nlohmann::json::parse(read_file(dir / kManifestName)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(e.what(), 0, (dir / kManifestName).string());
  }
}

FileHash verify_input(const std::filesystem::path& file) {
  namespace fs = std::filesystem;
  if (!fs::exists(file)) throw Error("missing input " + file.string());
  FileHash actual = hash_file(file);
  // The producing step's manifest sits in the file's directory or one above it (model/).
  // Manifests without a run_id belong to something else (e.g. a model directory).
  fs::path dir = file.parent_path();
  for (int depth = 0; depth < 2 && !dir.empty(); ++depth, dir = dir.parent_path()) {
    if (!fs::exists(dir / kManifestName)) continue;
    const auto j = nlohmann::json::parse(read_file(dir / kManifestName), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("run_id")) continue;
    const RunManifest m = manifest_from_json(j);
    const std::string name = fs::relative(file, dir).generic_string();
    for (const auto& out : m.outputs) {
      if (out.path == name && out.sha256 != actual.sha256) {
        throw SchemaError("hash mismatch against " + m.run_id + " (file changed after it was produced)", 0,
                          file.string());
      }
    }
    break;
  }
  return actual;
}

}  // namespace detect::service
