#include "qmf/tessellation.hpp"

#include <algorithm>

namespace qmf {

std::string to_string(RepairMode mode) {
  return mode == RepairMode::Off ? "off" : "greedy";
}

RepairMode parse_repair_mode(const std::string& s) {
  if (s == "off") return RepairMode::Off;
  if (s == "greedy" || s == "greedy-independent") return RepairMode::GreedyIndependent;
  throw Error(ErrorCode::MalformedConfig, "repair: unknown mode '" + s + "'");
}

namespace {

Region plaquette_of(const GraphWindow& g, VertexId y) {
  std::vector<VertexId> ids = g.neighbors(y);
  ids.push_back(y);
  return Region(std::move(ids));
}

bool all_complete(const GraphWindow& g, const Region& r) {
  return std::all_of(r.begin(), r.end(), [&](VertexId v) { return g.complete(v); });
}

Region union_of_plaquettes(const GraphWindow& g, const Region& centers) {
  Region out;
  for (VertexId y : centers) out = out | plaquette_of(g, y);
  return out;
}

nlohmann::json label(const GraphWindow& g, VertexId v) { return g.vertex(v).to_json(); }

}  // namespace

const Region& Tessellation::plaquette(VertexId y) const {
  auto it = plaquettes_.find(y);
  if (it == plaquettes_.end()) {
    throw Error(ErrorCode::UncertifiedTessellation,
                "no certified plaquette centered at " + graph_->vertex(y).key());
  }
  return it->second;
}

void Tessellation::certify(const Region& region) const {
  for (VertexId v : region) {
    if (v < 0 || static_cast<std::size_t>(v) >= graph_->size()) {
      throw Error(ErrorCode::VertexOutsideWindow, "id " + std::to_string(v));
    }
    if (!graph_->complete(v)) {
      throw Error(ErrorCode::RegionTouchesWindowEdge,
                  "vertex " + graph_->vertex(v).key() + " has neighbors outside the window");
    }
  }
  const Region cl = closure(*graph_, region);
  const Region outside = cl - certified_;
  if (!outside.empty()) {
    throw Error(ErrorCode::RegionTouchesWindowEdge,
                "closure reaches " + graph_->vertex(outside.ids().front()).key() +
                    ", beyond the certified tessellation domain");
  }
}

nlohmann::json Tessellation::to_json() const {
  const GraphWindow& g = *graph_;
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t n = 0; n < levels_.size(); ++n) {
    levels.push_back({{"n", n + 1},
                      {"centers", g.to_json(levels_[n].centers)},
                      {"plaquettes", g.to_json(levels_[n].plaquettes)}});
  }
  auto diag = [](const Diagnostic& d) {
    return nlohmann::json{{"ok", d.ok}, {"violations", d.violations}, {"witness", d.witness}};
  };
  return {{"root", label(g, root_)},
          {"repair", to_string(repair_)},
          {"repaired", repaired_},
          {"levels", levels},
          {"centers", g.to_json(centers_)},
          {"certified_domain", g.to_json(certified_)},
          {"diagnostics",
           {{"inner_boundary", diag(diagnostics_.inner_boundary)},
            {"independence", diag(diagnostics_.independence)},
            {"coverage", diag(diagnostics_.coverage)},
            {"growth", diag(diagnostics_.growth)}}}};
}

Tessellation build_tessellation(std::shared_ptr<const GraphWindow> graph, const Vertex& root,
                                int max_level, RepairMode repair) {
  if (!graph) throw Error(ErrorCode::InvalidGraph, "null graph window");
  if (max_level < 1) throw Error(ErrorCode::MalformedConfig, "max_level must be >= 1");
  const auto found = graph->find(root);
  if (!found) throw Error(ErrorCode::RootOutsideWindow, root.key());
  const GraphWindow& g = *graph;

  Tessellation t;
  t.graph_ = graph;
  t.root_ = *found;
  t.repair_ = repair;

  Region centers{t.root_};
  Region next_centers;
  for (int n = 1; n <= max_level; ++n) {
    if (!all_complete(g, centers)) break;
    Region plaquettes = union_of_plaquettes(g, centers);
    // ∂⃗V_n is only exact when every vertex of V_n sees all its neighbors.
    if (!all_complete(g, plaquettes)) break;
    t.levels_.push_back({centers, plaquettes});

    const Region front = external_boundary(g, plaquettes);
    if (repair == RepairMode::Off) {
      next_centers = centers | front;
    } else {
      std::vector<VertexId> kept = centers.ids();
      for (VertexId v : front) {
        const bool clash = std::any_of(kept.begin(), kept.end(),
                                       [&](VertexId c) { return g.adjacent(v, c); });
        if (clash) {
          t.repaired_ = true;
        } else {
          kept.push_back(v);
        }
      }
      next_centers = Region(std::move(kept));
    }
    if (front.empty()) break;  // finite graph exhausted
    centers = next_centers;
  }
  if (t.levels_.empty()) {
    throw Error(ErrorCode::RegionTouchesWindowEdge,
                "root plaquette of " + root.key() + " does not fit in the window");
  }

  const Region& last = t.levels_.back().plaquettes;
  t.certified_ = closure(g, last);
  t.centers_ = next_centers;
  for (VertexId y : t.centers_) {
    if (g.complete(y)) t.plaquettes_.emplace(y, plaquette_of(g, y));
  }
  t.diagnostics_ = check_tessellation(t, g);
  return t;
}

TessellationDiagnostics check_tessellation(const Tessellation& t, const GraphWindow& g) {
  TessellationDiagnostics out;
  const Region& v0 = t.centers();

  for (std::size_t n = 0; n < t.levels().size(); ++n) {
    const Region hit = boundary(g, t.levels()[n].plaquettes) & v0;
    if (!hit.empty()) {
      auto& d = out.inner_boundary;
      if (d.ok) d.witness = {{"level", n + 1}, {"vertex", label(g, hit.ids().front())}};
      d.ok = false;
      d.violations += hit.size();
    }
  }

  for (VertexId a : v0) {
    for (VertexId b : g.neighbors(a)) {
      if (b <= a || !v0.contains(b)) continue;
      auto& d = out.independence;
      if (d.ok) d.witness = nlohmann::json::array({label(g, a), label(g, b)});
      d.ok = false;
      ++d.violations;
    }
  }

  for (VertexId v : t.certified()) {
    if (v0.contains(v)) continue;
    const auto& ns = g.neighbors(v);
    if (std::any_of(ns.begin(), ns.end(), [&](VertexId n) { return v0.contains(n); })) continue;
    auto& d = out.coverage;
    if (d.ok) d.witness = {{"vertex", label(g, v)}};
    d.ok = false;
    ++d.violations;
  }

  const auto& lv = t.levels();
  for (std::size_t n = 0; n + 1 < lv.size(); ++n) {
    // A finite graph that is fully covered cannot keep growing.
    if (g.provider().finite() && lv[n + 1].plaquettes.size() == g.size()) continue;
    const bool plaquettes_grow = lv[n + 1].plaquettes.size() >= lv[n].plaquettes.size() + 2;
    const bool centers_grow = lv[n + 1].centers.size() >= lv[n].centers.size() + 1;
    if (plaquettes_grow && centers_grow) continue;
    auto& d = out.growth;
    if (d.ok) {
      d.witness = {{"level", n + 1},
                   {"plaquettes", {lv[n].plaquettes.size(), lv[n + 1].plaquettes.size()}},
                   {"centers", {lv[n].centers.size(), lv[n + 1].centers.size()}}};
    }
    d.ok = false;
    ++d.violations;
  }
  return out;
}

Region centers_in(const Tessellation& t, const Region& region) { return region & t.centers(); }

Region dext0(const Tessellation& t, const Region& region) {
  t.certify(region);
  Region out;
  for (VertexId y : boundary(t.graph(), region) & t.centers()) {
    out = out | Region(t.graph().neighbors(y));
  }
  return out;
}

Region amplitude_support(const Tessellation& t, const Region& region) {
  return region | dext0(t, region);
}

}  // namespace qmf
