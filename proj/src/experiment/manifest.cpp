#include "drsc/experiment/manifest.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"

namespace drsc::experiment {

namespace {

constexpr const char* kFormat = "drsc-run-manifest";

Json to_json(const StageRecord& r) {
  Json j;
  j["version"] = r.version;
  j["config"] = r.config;
  j["inputs"] = r.inputs;
  j["outputs"] = r.outputs;
  j["volatile"] = r.volatile_outputs;
  return j;
}

StageRecord record_from_json(const Json& j) {
  StageRecord r;
  r.version = required<int>(j, "version");
  r.config = required<std::map<std::string, std::string>>(j, "config");
  r.inputs = required<std::map<std::string, std::string>>(j, "inputs");
  r.outputs = required<std::map<std::string, std::string>>(j, "outputs");
  r.volatile_outputs = required<std::vector<std::string>>(j, "volatile");
  return r;
}

}  // namespace

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
  RunManifest m;
  const auto path = run_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return m;
  const Json j = read_json(path);
  if (j.value("format", "") != kFormat) throw ConfigError("not a run manifest: " + path.string());
  const Json stages = required<Json>(j, "stages");
  for (const auto& [name, rec] : stages.items()) m.stages_[name] = record_from_json(rec);
  return m;
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
  Json j;
  j["format"] = kFormat;
  j["version"] = 1;
  Json stages = Json::object();
  for (const auto& [name, rec] : stages_) stages[name] = to_json(rec);
  j["stages"] = std::move(stages);
  write_json(run_dir / "manifest.json", j);
}

const StageRecord& RunManifest::stage(const std::string& name) const {
  const auto it = stages_.find(name);
  if (it == stages_.end()) throw MissingArtifact("manifest stage '" + name + "'");
  return it->second;
}

std::string RunManifest::require(const std::filesystem::path& run_dir, const std::string& stage_name,
                                 const std::string& relative) const {
  const auto& rec = stage(stage_name);
  const auto it = rec.outputs.find(relative);
  if (it == rec.outputs.end()) throw MissingArtifact(relative + " (not recorded by " + stage_name + ")");
  const auto path = run_dir / relative;
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string());
  const auto sha = sha256_file(path);
  if (sha != it->second) throw StaleArtifact(path.string());
  return sha;
}

std::map<std::string, std::string> RunManifest::require_all(const std::filesystem::path& run_dir,
                                                            const std::string& stage_name) const {
  std::map<std::string, std::string> out;
  for (const auto& [rel, sha] : stage(stage_name).outputs) out[rel] = require(run_dir, stage_name, rel);
  return out;
}

std::string hash_output(const std::filesystem::path& run_dir, const std::string& relative) {
  const auto path = run_dir / relative;
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string());
  return sha256_file(path);
}

void record_wall_time(const std::filesystem::path& run_dir, const std::string& stage, double seconds) {
  const auto path = run_dir / "timings.json";
  Json j = std::filesystem::exists(path) ? read_json(path) : Json::object();
  j[stage] = seconds;
  write_json(path, j);
}

}  // namespace drsc::experiment
