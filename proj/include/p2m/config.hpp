#pragma once

#include "p2m/pipeline.hpp"

#include <filesystem>
#include <string_view>

namespace p2m {

/// Everything one CLI run needs. Settable keys are listed by config_keys().
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path init_mesh;  // with InitMode::File
  std::filesystem::path output;
  std::filesystem::path log;        // RunLog destination; empty for none
  InitMode init = InitMode::ConvexHull;
  bool oriented_normals = false;
  remesh::ShellConfig shell;
  LevelSchedule schedule;
  double tau = 0.01;                // F-score threshold as a fraction of the truth diagonal
  std::size_t eval_samples = 100000;
  bool timing = true;               // false zeroes the timing columns of the RunLog

  /// Checks numeric ranges and that the input is readable and the outputs writable.
  void validate() const;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text value; throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies `key = value` lines; blank lines and text after '#' are ignored.
void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Current values of every key, one `key = value` line each.
std::string to_config_text(const RunConfig& cfg);

}  // namespace p2m
