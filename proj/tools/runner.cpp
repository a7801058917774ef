#include "qmf/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

#include "qmf/amplitudes.hpp"
#include "qmf/json_io.hpp"
#include "qmf/markov_field.hpp"
#include "qmf/suite.hpp"
#include "qmf/tessellation.hpp"

namespace qmf::cli {

namespace {

Vertex natural_root(const GraphProvider& p) {
  if (const auto* lattice = dynamic_cast<const LatticeGraph*>(&p)) {
    return Vertex(std::vector<std::int64_t>(static_cast<std::size_t>(lattice->dim()), 0));
  }
  if (p.kind() == UniverseKind::RegularTree) return Vertex(std::string("r"));
  throw Error(ErrorCode::MalformedConfig, "root: required for explicit graphs");
}

VerificationReport diagnostic_report(const std::string& check, const std::string& anchor, const Diagnostic& d) {
  return make_report(check, anchor, static_cast<double>(d.violations), 0.0, d.witness);
}

Operator parse_observable(const nlohmann::json& j, const GraphWindow& g, const SiteModel& sites) {
  if (!j.is_object() || !j.contains("support") || !j.contains("matrix")) {
    throw Error(ErrorCode::MalformedConfig, "observable needs 'support' and 'matrix'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "support" && key != "matrix") {
      throw Error(ErrorCode::MalformedConfig, "observable: unknown key '" + key + "'");
    }
  }
  if (!j.at("support").is_array()) throw Error(ErrorCode::MalformedConfig, "observable.support must be an array");
  std::vector<Site> order;
  for (const auto& label : j.at("support")) order.push_back(g.id(g.provider().parse(label)));
  return Operator::from_ordered(order, sites.dims(order), matrix_from_json(j.at("matrix")));
}

State build_state(const RunConfig& c, const GraphWindow& g, const SiteModel& sites) {
  State state(sites);
  for (const auto& [label, density] : c.densities) {
    state.set_density(g.id(g.provider().parse(label)), matrix_from_json(density));
  }
  return state;
}

bool diagonal_state(const State& state) {
  for (const auto& [site, rho] : state.explicit_densities()) {
    if ((rho - Operator::Matrix(rho.diagonal().asDiagonal())).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

std::string format_residual(const nlohmann::json& v) {
  if (v.is_null()) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v.get<double>());
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

RunResult run(const RunConfig& c) {
  const auto provider = make_graph(c.graph);
  const Vertex root = c.root.is_null() ? natural_root(*provider) : provider->parse(c.root);
  auto window = std::make_shared<const GraphWindow>(GraphWindow::materialize(provider, root, c.window_radius));
  auto tess = std::make_shared<const Tessellation>(
      build_tessellation(window, root, c.max_level, parse_repair_mode(c.repair)));
  const SiteModel sites(c.site_dim);
  const State state = build_state(c, *window, sites);
  const Rng rng(c.seed);

  std::vector<Task> tasks;
  for (Task t : c.tasks) {
    if (t != Task::FullReport) {
      tasks.push_back(t);
      continue;
    }
    for (Task s : {Task::Tessellate, Task::VerifyFamily, Task::VerifyField}) tasks.push_back(s);
    if (!c.region.is_null() && !c.observable.is_null()) tasks.push_back(Task::StateEval);
  }

  nlohmann::json report = {{"config", c.to_json()}};
  nlohmann::json skipped = nlohmann::json::array();
  std::vector<VerificationReport> records;

  std::shared_ptr<const AmplitudeFamily> family;
  std::optional<FamilyCertificate> certificate;
  auto get_family = [&]() -> std::shared_ptr<const AmplitudeFamily> {
    if (!family) {
      family = std::make_shared<const AmplitudeFamily>(AmplitudeFamily::from_spec(
          tess, sites, AmplitudeSpec::from_json(c.amplitude), c.tolerances.invertibility_floor));
    }
    return family;
  };
  bool independence_reported = false;
  auto require_independence = [&](Task t) {
    if (tess->diagnostics().independence.ok) return true;
    if (!independence_reported) {
      records.push_back(diagnostic_report("tessellation-independence", "centers are pairwise non-adjacent",
                                          tess->diagnostics().independence));
      independence_reported = true;
    }
    skipped.push_back({{"task", to_string(t)}, {"reason", "centers are not pairwise non-adjacent"}});
    return false;
  };

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task task = tasks[k];
    switch (task) {
      case Task::Tessellate: {
        const auto& d = tess->diagnostics();
        records.push_back(diagnostic_report("tessellation-inner-boundary", "level boundaries avoid the centers",
                                            d.inner_boundary));
        records.push_back(diagnostic_report("tessellation-independence", "centers are pairwise non-adjacent",
                                            d.independence));
        records.push_back(diagnostic_report("tessellation-coverage", "plaquettes cover the certified domain",
                                            d.coverage));
        records.push_back(diagnostic_report("tessellation-growth", "levels grow strictly", d.growth));
        independence_reported = true;
        report["tessellation"] = tess->to_json();
        break;
      }
      case Task::VerifyFamily: {
        if (!require_independence(task)) break;
        certificate = verify_family(*get_family(), state, c.tolerances);
        for (const auto& r : certificate->reports()) records.push_back(r);
        break;
      }
      case Task::VerifyField: {
        if (!require_independence(task)) break;
        if (!certificate) certificate = verify_family(*get_family(), state, c.tolerances);
        if (!certificate->ok()) {
          skipped.push_back({{"task", to_string(task)}, {"reason", "amplitude family is not certified"}});
          break;
        }
        const MarkovField field(get_family(), state, c.tolerances);
        for (auto& r : field_suite(field, rng.split(k), c.suite, c.limits)) records.push_back(std::move(r));
        break;
      }
      case Task::StateEval: {
        if (c.region.is_null() || c.observable.is_null()) {
          throw Error(ErrorCode::MalformedConfig, "state-eval needs 'region' and an observable");
        }
        if (!require_independence(task)) break;
        const MarkovField field(get_family(), state, c.tolerances);
        const Region region = window->parse_region(c.region);
        const Operator a = parse_observable(c.observable, *window, sites);
        const Complex value = field.finite_volume_state(region, a);
        nlohmann::json out = {{"region", window->to_json(region)}, {"value", complex_to_json(value)}};
        if (field.family().is_diagonal() && is_diagonal(a) && diagonal_state(state)) {
          const VerificationReport r = classical_oracle_compare(field, region, a);
          out["oracle"] = r.witness.at("oracle");
          out["oracle_delta"] = r.residual;
          records.push_back(r);
        }
        report["state"] = out;
        break;
      }
      case Task::FullReport: break;
    }
  }

  nlohmann::json list = nlohmann::json::array();
  std::size_t passed = 0;
  double max_residual = 0.0;
  for (const auto& r : records) {
    list.push_back(to_json(r));
    if (r.pass) ++passed;
    if (!std::isnan(r.residual)) max_residual = std::max(max_residual, r.residual);
  }
  report["records"] = list;
  if (!skipped.empty()) report["skipped"] = skipped;
  report["summary"] = {{"checks", records.size()},
                       {"passed", passed},
                       {"max_residual", max_residual},
                       {"seed", c.seed},
                       {"config_hash", config_hash(c)}};

  RunResult result;
  result.report = report;
  result.text = render_summary(report);
  result.exit_code = passed == records.size() && skipped.empty() ? 0 : 2;
  return result;
}

std::string render_report(const nlohmann::json& report) {
  if (!report.is_object() || !report.contains("records") || !report.at("records").is_array()) {
    throw Error(ErrorCode::MalformedReport, "report needs a 'records' array");
  }
  struct Row {
    std::string check, anchor, residual, tolerance, result;
    bool pass;
  };
  std::vector<Row> rows;
  for (const auto& j : report.at("records")) {
    const VerificationReport r = report_from_json(j);
    rows.push_back({r.check, r.anchor, format_residual(j.at("residual")), format_residual(j.at("tolerance")),
                    r.pass ? "PASS" : "FAIL", r.pass});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return !a.pass && b.pass; });

  std::size_t wc = 5, wa = 6;
  for (const auto& r : rows) {
    wc = std::max(wc, r.check.size());
    wa = std::max(wa, r.anchor.size());
  }
  std::ostringstream out;
  out << pad("check", wc) << "  " << pad("anchor", wa) << "  " << pad("residual", 10) << "  "
      << pad("tolerance", 10) << "  result\n";
  for (const auto& r : rows) {
    out << pad(r.check, wc) << "  " << pad(r.anchor, wa) << "  " << pad(r.residual, 10) << "  "
        << pad(r.tolerance, 10) << "  " << r.result << "\n";
  }
  return out.str();
}

std::string render_summary(const nlohmann::json& report) {
  std::ostringstream out;
  if (report.contains("tessellation")) {
    const auto& t = report.at("tessellation");
    out << "level  centers  plaquette-sites\n";
    for (std::size_t n = 0; n < t.at("levels").size(); ++n) {
      const auto& l = t.at("levels")[n];
      char buf[64];
      std::snprintf(buf, sizeof buf, "%5zu  %7zu  %15zu\n", n + 1, l.at("centers").size(),
                    l.at("plaquettes").size());
      out << buf;
    }
    out << "\n";
  }
  out << render_report(report);
  if (report.contains("state")) {
    const auto& s = report.at("state");
    out << "\nstate value: " << s.at("value").dump();
    if (s.contains("oracle_delta")) out << "  oracle: " << s.at("oracle").dump() << "  delta: "
                                        << format_residual(s.at("oracle_delta"));
    out << "\n";
  }
  if (report.contains("skipped")) {
    for (const auto& s : report.at("skipped"))
      out << "skipped " << s.at("task").get<std::string>() << ": " << s.at("reason").get<std::string>() << "\n";
  }
  if (report.contains("summary")) {
    const auto& s = report.at("summary");
    out << "\n" << s.at("passed").get<std::size_t>() << "/" << s.at("checks").get<std::size_t>()
        << " checks passed, max residual " << format_residual(s.at("max_residual")) << ", seed "
        << s.at("seed").get<std::uint64_t>() << ", config " << s.at("config_hash").get<std::string>() << "\n";
  }
  return out.str();
}

}  // namespace qmf::cli
