#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace drsc::experiment {

/// Inputs and outputs of one pipeline stage, keyed by path relative to the run directory.
struct StageRecord {
  int version = 1;
  std::map<std::string, std::string> config;   // section -> SHA-256
  std::map<std::string, std::string> inputs;   // path -> SHA-256
  std::map<std::string, std::string> outputs;  // path -> SHA-256
  std::vector<std::string> volatile_outputs;   // wall-clock bearing files, not hashed
};

/// manifest.json in the run directory. Wall times live in timings.json so that the
/// manifest itself is reproducible.
class RunManifest {
 public:
  static RunManifest load(const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;

  [[nodiscard]] bool has(const std::string& stage) const { return stages_.count(stage) != 0; }
  [[nodiscard]] const StageRecord& stage(const std::string& name) const;
  [[nodiscard]] const std::map<std::string, StageRecord>& stages() const { return stages_; }
  void set(const std::string& name, StageRecord record) { stages_[name] = std::move(record); }

  /// Checks that `stage` produced `relative` and the file still matches; returns its hash.
  /// Throws MissingArtifact when the stage or file is absent and StaleArtifact on mismatch.
  std::string require(const std::filesystem::path& run_dir, const std::string& stage,
                      const std::string& relative) const;
  /// Every output of `stage`, verified.
  std::map<std::string, std::string> require_all(const std::filesystem::path& run_dir, const std::string& stage) const;

 private:
  std::map<std::string, StageRecord> stages_;
};

/// Hash of a file under the run directory.
std::string hash_output(const std::filesystem::path& run_dir, const std::string& relative);

/// Records a stage wall time in timings.json.
void record_wall_time(const std::filesystem::path& run_dir, const std::string& stage, double seconds);

}  // namespace drsc::experiment
