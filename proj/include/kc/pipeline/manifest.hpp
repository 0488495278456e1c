#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kc/common/io.hpp"

namespace kc::pipeline {

// A file the run read or wrote. Stage outputs live in the object store as
// objects/<sha256><ext>; `path` is relative to the output root for those and
// absolute for external inputs.
struct ArtifactRef {
  std::string path;
  std::string sha256;
  bool operator==(const ArtifactRef&) const = default;
};

struct StageRecord {
  std::string status;  // "complete" or "failed"
  std::uint64_t seed = 0;
  std::map<std::string, ArtifactRef> inputs;
  std::map<std::string, ArtifactRef> outputs;
  std::string started_at;
  double elapsed_ms = 0.0;
  std::vector<Json> log;  // skipped items and per-item failures
};

struct RunManifest {
  std::string run_id;
  Json config = Json::object();
  std::map<std::string, StageRecord> stages;
};

Json to_json(const ArtifactRef& a);
Json to_json(const StageRecord& s);
Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

// Write-once, content-addressed files under <root>/objects.
class ObjectStore {
 public:
  explicit ObjectStore(std::filesystem::path root);

  // Stores bytes as objects/<sha256><ext>. An existing object with the same
  // address is left untouched.
  ArtifactRef put(std::string_view bytes, const std::string& ext);
  std::filesystem::path resolve(const ArtifactRef& ref) const;
  // Reads the object and checks its hash; DataError on mismatch or absence.
  std::string read(const ArtifactRef& ref) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// Hash of an external input file, recorded by absolute path.
ArtifactRef external_input(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& output_root, const std::string& run_id);
std::optional<RunManifest> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const RunManifest& m);

// Artifacts whose file is missing or whose content no longer hashes to the
// recorded value, as "stage/name: reason" strings.
std::vector<std::string> verify_manifest(const RunManifest& m, const std::filesystem::path& output_root);

}  // namespace kc::pipeline
