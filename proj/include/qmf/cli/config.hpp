#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmf/report.hpp"
#include "qmf/suite.hpp"

namespace qmf::cli {

enum class Task { Tessellate, VerifyFamily, VerifyField, StateEval, FullReport };

std::string to_string(Task t);
Task parse_task(const std::string& s);

/// Everything a run needs. Parsing rejects unknown keys and to_json echoes
/// every field with its default filled in.
struct RunConfig {
  nlohmann::json graph;
  nlohmann::json root;  // null: the provider's natural root
  int window_radius = 8;
  int max_level = 16;
  std::string repair = "off";
  int site_dim = 2;
  /// Per-vertex densities; the rest are maximally mixed.
  std::vector<std::pair<nlohmann::json, nlohmann::json>> densities;
  nlohmann::json amplitude = {{"mode", "ising"}, {"J", 0.0}, {"h", 0.0}};
  Tolerances tolerances;
  std::vector<Task> tasks{Task::FullReport};
  std::uint64_t seed = 1;
  std::string output;
  nlohmann::json region;      // labels for state-eval
  nlohmann::json observable;  // {"support": [...], "matrix": [[...]]}
  SuiteCounts suite;
  InstanceLimits limits;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

RunConfig load_config(const std::string& path);
nlohmann::json read_json_file(const std::string& path);

/// 64-bit FNV-1a of the compact echoed config, as 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace qmf::cli
