#pragma once

#include <string>

#include <json.hpp>

#include "qmf/cli/config.hpp"

namespace qmf::cli {

struct RunResult {
  nlohmann::json report;
  std::string text;
  int exit_code = 0;  // 0 all checks pass, 2 some check failed
};

/// Executes the configured tasks in order. Contract and config errors
/// propagate as qmf::Error (the caller maps them to exit 1).
RunResult run(const RunConfig& config);

/// Fixed-width table of the report records (check, anchor, residual,
/// tolerance, PASS/FAIL) with failing rows first. Throws malformed-report.
std::string render_report(const nlohmann::json& report);

/// Table plus the tessellation levels, state values, skipped tasks and the
/// summary line, whichever the report carries.
std::string render_summary(const nlohmann::json& report);

}  // namespace qmf::cli
