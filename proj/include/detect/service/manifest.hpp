#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace detect::service {

enum class Step { curate, generate, judge, train, evaluate, report, annotate };
std::string_view to_string(Step s);

struct FileHash {
  std::string path;  // relative to the manifest's directory when inside it
  std::string sha256;
};

// One per artifact-producing command, written as manifest.json next to the outputs.
struct RunManifest {
  std::string run_id;  // derived from step, config, inputs and seed; equal runs share it
  Step step = Step::curate;
  nlohmann::json config = nlohmann::json::object();
  std::vector<FileHash> inputs;
  std::vector<FileHash> outputs;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  nlohmann::json extra = nlohmann::json::object();  // prompt checksums, warnings, counts
};

nlohmann::ordered_json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

std::string utc_timestamp();
FileHash hash_file(const std::filesystem::path& path, const std::filesystem::path& base = {});
std::string derive_run_id(Step step, const nlohmann::json& config, const std::vector<FileHash>& inputs,
                          std::uint64_t seed);

constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& dir);

// Checks `file` against the manifest in its directory, when there is one that lists it.
// Throws SchemaError on a hash mismatch (the artifact changed after it was produced).
// Returns the file's hash either way.
FileHash verify_input(const std::filesystem::path& file);

}  // namespace detect::service
