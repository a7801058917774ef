#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmf/cli/config.hpp"
#include "qmf/cli/runner.hpp"
#include "qmf/error.hpp"

namespace {

using qmf::cli::RunConfig;
using qmf::cli::Task;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tol;
  std::string repair;
  std::string observable;
  std::string report_file;
};

void apply_overrides(RunConfig& c, const Flags& f) {
  if (f.seed) c.seed = *f.seed;
  if (!f.repair.empty()) c.repair = f.repair;
  if (!f.out.empty()) c.output = f.out;
  for (const auto& item : f.tol) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw qmf::Error(qmf::ErrorCode::MalformedConfig, "--tol expects NAME=VALUE, got '" + item + "'");
    }
    double value = 0.0;
    try {
      value = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw qmf::Error(qmf::ErrorCode::MalformedConfig, "--tol value is not a number: '" + item + "'");
    }
    c.tolerances.set(item.substr(0, eq), value);
  }
  if (!f.observable.empty()) {
    nlohmann::json obs = qmf::cli::read_json_file(f.observable);
    // An observable file may carry its own region.
    if (obs.is_object() && obs.contains("region")) {
      c.region = obs.at("region");
      obs.erase("region");
    }
    c.observable = obs;
  }
}

std::string text_path(const std::string& json_path) {
  std::filesystem::path p(json_path);
  if (p.extension() == ".json") return p.replace_extension(".txt").string();
  return json_path + ".txt";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qmf::Error(qmf::ErrorCode::MalformedConfig, "cannot write " + path);
  out << content;
}

int run_tasks(const Flags& f, std::vector<Task> tasks) {
  if (f.config.empty()) throw qmf::Error(qmf::ErrorCode::MalformedConfig, "--config is required");
  RunConfig c = qmf::cli::load_config(f.config);
  if (!tasks.empty()) c.tasks = std::move(tasks);
  apply_overrides(c, f);
  const auto result = qmf::cli::run(c);
  if (!c.output.empty()) {
    write_file(c.output, result.report.dump(2) + "\n");
    write_file(text_path(c.output), result.text);
  }
  std::cout << result.text;
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build and verify quantum Markov fields on graphs"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run configuration (JSON)");
    sub->add_option("--out", f.out, "report JSON path; a .txt summary is written next to it");
    sub->add_option("--seed", f.seed, "override the configured seed");
    sub->add_option("--tol", f.tol, "override a tolerance, NAME=VALUE")->allow_extra_args(false);
    sub->add_option("--repair", f.repair, "tessellation repair mode (off, greedy)");
  };

  auto* tessellate = app.add_subcommand("tessellate", "build the tessellation and print its diagnostics");
  auto* verify = app.add_subcommand("verify", "certify the amplitude family and run the field checks");
  auto* state = app.add_subcommand("state", "evaluate the finite-volume state on an observable");
  auto* report = app.add_subcommand("report", "render a saved report, or run every configured task");
  for (auto* sub : {tessellate, verify, state, report}) add_common(sub);
  state->add_option("--observable", f.observable, "observable JSON: support labels, matrix, optional region");
  report->add_option("file", f.report_file, "saved report JSON to render");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (tessellate->parsed()) return run_tasks(f, {Task::Tessellate});
    if (verify->parsed()) return run_tasks(f, {Task::VerifyFamily, Task::VerifyField});
    if (state->parsed()) return run_tasks(f, {Task::StateEval});
    if (!f.report_file.empty()) {
      std::cout << qmf::cli::render_summary(qmf::cli::read_json_file(f.report_file));
      return 0;
    }
    return run_tasks(f, {});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
