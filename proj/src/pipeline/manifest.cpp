#include "kc/pipeline/manifest.hpp"

#include "kc/common/error.hpp"

namespace kc::pipeline {

namespace fs = std::filesystem;

Json to_json(const ArtifactRef& a) { return Json{{"path", a.path}, {"sha256", a.sha256}}; }

namespace {

Json refs_json(const std::map<std::string, ArtifactRef>& refs) {
  Json out = Json::object();
  for (const auto& [name, ref] : refs) out[name] = to_json(ref);
  return out;
}

std::map<std::string, ArtifactRef> refs_from(const Json& j) {
  std::map<std::string, ArtifactRef> out;
  for (const auto& [name, r] : j.items())
    out[name] = ArtifactRef{r.at("path").get<std::string>(), r.at("sha256").get<std::string>()};
  return out;
}

}  // namespace

Json to_json(const StageRecord& s) {
  return Json{{"status", s.status},       {"seed", s.seed},         {"inputs", refs_json(s.inputs)},
              {"outputs", refs_json(s.outputs)}, {"started_at", s.started_at}, {"elapsed_ms", s.elapsed_ms},
              {"log", s.log}};
}

Json to_json(const RunManifest& m) {
  Json stages = Json::object();
  for (const auto& [name, s] : m.stages) stages[name] = to_json(s);
  return Json{{"run_id", m.run_id}, {"config", m.config}, {"stages", stages}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.at("config");
    for (const auto& [name, s] : j.at("stages").items()) {
      StageRecord r;
      r.status = s.at("status").get<std::string>();
      r.seed = s.at("seed").get<std::uint64_t>();
      r.inputs = refs_from(s.at("inputs"));
      r.outputs = refs_from(s.at("outputs"));
      r.started_at = s.value("started_at", "");
      r.elapsed_ms = s.value("elapsed_ms", 0.0);
      r.log = s.value("log", std::vector<Json>{});
      m.stages[name] = std::move(r);
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

ObjectStore::ObjectStore(fs::path root) : root_(std::move(root)) {}

ArtifactRef ObjectStore::put(std::string_view bytes, const std::string& ext) {
  const std::string hash = sha256_hex(bytes);
  ArtifactRef ref{"objects/" + hash + ext, hash};
  const fs::path target = root_ / ref.path;
  if (!fs::exists(target)) {
    fs::create_directories(target.parent_path());
    write_file_atomic(target, bytes);
  }
  return ref;
}

fs::path ObjectStore::resolve(const ArtifactRef& ref) const {
  const fs::path p(ref.path);
  return p.is_absolute() ? p : root_ / p;
}

std::string ObjectStore::read(const ArtifactRef& ref) const {
  const fs::path p = resolve(ref);
  if (!fs::exists(p)) throw DataError("artifact " + p.string() + " is missing");
  std::string bytes = read_file(p);
  if (sha256_hex(bytes) != ref.sha256) throw DataError("artifact " + p.string() + " does not match its recorded hash");
  return bytes;
}

ArtifactRef external_input(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("input " + path.string() + " does not exist");
  return ArtifactRef{fs::absolute(path).lexically_normal().generic_string(), sha256_file(path)};
}

fs::path manifest_path(const fs::path& output_root, const std::string& run_id) {
  return output_root / "runs" / run_id / "manifest.json";
}

std::optional<RunManifest> load_manifest(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return manifest_from_json(Json::parse(read_file(path)));
  } catch (const Json::parse_error& e) {
    throw DataError("run manifest " + path.string() + " is not valid JSON: " + e.what());
  }
}

void save_manifest(const fs::path& path, const RunManifest& m) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, to_json(m).dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const RunManifest& m, const fs::path& output_root) {
  std::vector<std::string> problems;
  const ObjectStore store(output_root);
  for (const auto& [stage, rec] : m.stages) {
    for (const auto* refs : {&rec.inputs, &rec.outputs})
      for (const auto& [name, ref] : *refs) {
        const fs::path p = store.resolve(ref);
        if (!fs::exists(p))
          problems.push_back(stage + "/" + name + ": missing");
        else if (sha256_file(p) != ref.sha256)
          problems.push_back(stage + "/" + name + ": hash mismatch");
      }
  }
  return problems;
}

}  // namespace kc::pipeline
