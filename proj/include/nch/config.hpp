#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nch/optimizer.hpp"

namespace nch {

/// Fully resolved and validated run configuration.
///
/// Field-valued keys accept either an expression over x, y, t (see
/// Expression) or `file:<path>` naming a snapshot; relative paths are taken
/// from the configuration file's directory. Spatial keys (initial data,
/// final-time targets) must not depend on t.
struct RunConfig {
  StateSystem state;
  SpaceTimeField control;
  CostData cost;
  ControlBounds bounds;
  AdjointMode mode = AdjointMode::Transpose;
  OptimizeConfig optimizer;
  std::vector<double> eps_list;
  SpaceTimeField direction;
  std::string output_dir;
  int stride = 1;

  /// Every key with its effective value ("section.key", value), defaults
  /// included, in schema order.
  std::vector<std::pair<std::string, std::string>> resolved;
  /// FNV-1a of the resolved keys and the bytes of any referenced files.
  std::string hash;

  ControlProblem problem() const { return {state, cost, bounds, mode}; }
};

/// Throws ConfigError listing every violation (missing or unknown keys,
/// malformed values, violated constraints).
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text,
                              const std::filesystem::path& base_dir = ".");

/// The schema as a commented INI document with every default filled in.
std::string default_config_text();

/// Output directory for a run: $NCH_OUTPUT_ROOT/<dir> when the variable is
/// set and dir is relative, otherwise dir itself.
std::filesystem::path resolve_output_dir(const std::string& dir);

}  // namespace nch
