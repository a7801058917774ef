#include "qmf/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "qmf/error.hpp"

namespace qmf::cli {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::MalformedConfig, msg); }

int integer(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer()) bad(key + " must be an integer");
  return j.get<int>();
}

void check_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) bad(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::Tessellate: return "tessellate";
    case Task::VerifyFamily: return "verify-family";
    case Task::VerifyField: return "verify-field";
    case Task::StateEval: return "state-eval";
    case Task::FullReport: return "full-report";
  }
  return "unknown";
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::Tessellate, Task::VerifyFamily, Task::VerifyField, Task::StateEval, Task::FullReport})
    if (to_string(t) == s) return t;
  bad("tasks: unknown task '" + s + "'");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  check_keys(j, "config",
             {"graph", "root", "window_radius", "max_level", "repair", "sites", "state", "amplitude",
              "tolerances", "tasks", "seed", "output", "region", "observable", "suite", "limits"});
  RunConfig c;
  if (!j.contains("graph")) bad("config: missing key 'graph'");
  c.graph = j.at("graph");
  if (j.contains("root")) c.root = j.at("root");
  if (j.contains("window_radius")) c.window_radius = integer(j.at("window_radius"), "window_radius");
  if (j.contains("max_level")) c.max_level = integer(j.at("max_level"), "max_level");
  if (c.max_level < 1) bad("max_level must be at least 1");
  if (j.contains("repair")) {
    if (!j.at("repair").is_string()) bad("repair must be a string");
    c.repair = j.at("repair").get<std::string>();
  }
  if (j.contains("sites")) {
    check_keys(j.at("sites"), "sites", {"dim"});
    if (j.at("sites").contains("dim")) c.site_dim = integer(j.at("sites").at("dim"), "sites.dim");
    if (c.site_dim < 1) bad("sites.dim must be positive");
  }
  if (j.contains("state")) {
    check_keys(j.at("state"), "state", {"densities"});
    const auto& list = j.at("state").value("densities", nlohmann::json::array());
    if (!list.is_array()) bad("state.densities must be an array");
    for (const auto& entry : list) {
      check_keys(entry, "state.densities[]", {"vertex", "density"});
      if (!entry.contains("vertex") || !entry.contains("density")) {
        bad("state.densities[] needs 'vertex' and 'density'");
      }
      c.densities.emplace_back(entry.at("vertex"), entry.at("density"));
    }
  }
  if (j.contains("amplitude")) c.amplitude = j.at("amplitude");
  if (j.contains("tolerances")) c.tolerances = Tolerances::from_json(j.at("tolerances"));
  if (j.contains("tasks")) {
    if (!j.at("tasks").is_array() || j.at("tasks").empty()) bad("tasks must be a non-empty array");
    c.tasks.clear();
    for (const auto& t : j.at("tasks")) {
      if (!t.is_string()) bad("tasks entries must be strings");
      c.tasks.push_back(parse_task(t.get<std::string>()));
    }
  }
  if (j.contains("seed")) {
    const auto& seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      bad("seed must be a non-negative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string()) bad("output must be a string");
    c.output = j.at("output").get<std::string>();
  }
  if (j.contains("region")) c.region = j.at("region");
  if (j.contains("observable")) c.observable = j.at("observable");
  if (j.contains("suite")) c.suite = SuiteCounts::from_json(j.at("suite"));
  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    check_keys(l, "limits", {"dense_sites", "choi_dimension", "oracle_configurations", "attempts"});
    if (l.contains("dense_sites")) c.limits.dense_sites = static_cast<std::size_t>(integer(l.at("dense_sites"), "limits.dense_sites"));
    if (l.contains("choi_dimension")) c.limits.choi_dimension = integer(l.at("choi_dimension"), "limits.choi_dimension");
    if (l.contains("oracle_configurations")) {
      c.limits.oracle_configurations = integer(l.at("oracle_configurations"), "limits.oracle_configurations");
    }
    if (l.contains("attempts")) c.limits.attempts = integer(l.at("attempts"), "limits.attempts");
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json densities_json = nlohmann::json::array();
  for (const auto& [v, d] : densities) densities_json.push_back({{"vertex", v}, {"density", d}});
  nlohmann::json tasks_json = nlohmann::json::array();
  for (Task t : tasks) tasks_json.push_back(to_string(t));
  return {{"graph", graph},
          {"root", root},
          {"window_radius", window_radius},
          {"max_level", max_level},
          {"repair", repair},
          {"sites", {{"dim", site_dim}}},
          {"state", {{"densities", densities_json}}},
          {"amplitude", amplitude},
          {"tolerances", tolerances.to_json()},
          {"tasks", tasks_json},
          {"seed", seed},
          {"output", output},
          {"region", region},
          {"observable", observable},
          {"suite", suite.to_json()},
          {"limits",
           {{"dense_sites", limits.dense_sites},
            {"choi_dimension", limits.choi_dimension},
            {"oracle_configurations", limits.oracle_configurations},
            {"attempts", limits.attempts}}}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad(path + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) { return RunConfig::from_json(read_json_file(path)); }

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qmf::cli
