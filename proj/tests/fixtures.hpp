#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "qmf/amplitudes.hpp"
#include "qmf/graph.hpp"
#include "qmf/markov_field.hpp"
#include "qmf/tessellation.hpp"

namespace fixtures {

using namespace qmf;

inline std::shared_ptr<const GraphWindow> window(const nlohmann::json& spec, const Vertex& root,
                                                 int radius) {
  return std::make_shared<const GraphWindow>(GraphWindow::materialize(make_graph(spec), root, radius));
}

/// Explicit graph spec; spelled out because a braced list of pairs would
/// otherwise become a JSON object.
inline nlohmann::json explicit_graph(const std::vector<std::pair<std::string, std::string>>& edges) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [a, b] : edges) list.push_back(nlohmann::json::array({a, b}));
  return {{"type", "explicit"}, {"edges", list}};
}

inline Vertex point(std::vector<std::int64_t> c) { return Vertex(std::move(c)); }

inline std::shared_ptr<const GraphWindow> line_window(int radius) {
  return window({{"type", "lattice"}, {"dim", 1}}, point({0}), radius);
}

inline std::shared_ptr<const GraphWindow> z2_window(int radius) {
  return window({{"type", "lattice"}, {"dim", 2}}, point({0, 0}), radius);
}

inline std::shared_ptr<const GraphWindow> tree_window(int degree, int depth) {
  return window({{"type", "tree"}, {"degree", degree}}, Vertex(std::string("r")), depth);
}

/// r–a, r–b, a–c, b–d, c–d: the centers c and d end up adjacent.
inline std::shared_ptr<const GraphWindow> pentagon_window() {
  return window(explicit_graph({{"r", "a"}, {"r", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}}),
                Vertex(std::string("r")), -1);
}

inline std::shared_ptr<const Tessellation> tessellate(std::shared_ptr<const GraphWindow> g,
                                                      int max_level = 16,
                                                      RepairMode repair = RepairMode::Off) {
  return std::make_shared<const Tessellation>(build_tessellation(g, g->vertex(0), max_level, repair));
}

/// Window ids of integer-line points.
inline Region line_region(const GraphWindow& g, std::vector<std::int64_t> xs) {
  std::vector<VertexId> ids;
  for (auto x : xs) ids.push_back(g.id(point({x})));
  return Region(std::move(ids));
}

inline Region line_interval(const GraphWindow& g, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> xs;
  for (auto x = lo; x <= hi; ++x) xs.push_back(x);
  return line_region(g, xs);
}

inline Region z2_region(const GraphWindow& g, std::vector<std::pair<std::int64_t, std::int64_t>> ps) {
  std::vector<VertexId> ids;
  for (auto [a, b] : ps) ids.push_back(g.id(point({a, b})));
  return Region(std::move(ids));
}

inline Region named_region(const GraphWindow& g, std::vector<std::string> names) {
  std::vector<VertexId> ids;
  for (auto& n : names) ids.push_back(g.id(Vertex(n)));
  return Region(std::move(ids));
}

inline std::shared_ptr<const AmplitudeFamily> ising_family(std::shared_ptr<const Tessellation> t,
                                                           double J, double h = 0.0) {
  EdgeSpec e;
  e.mode = EdgeMode::Ising;
  e.J = J;
  e.h_center = e.h_neighbor = h;
  AmplitudeSpec spec;
  spec.default_edge = e;
  return std::make_shared<const AmplitudeFamily>(AmplitudeFamily::from_spec(t, SiteModel(2), spec));
}

inline std::shared_ptr<const AmplitudeFamily> identity_family(std::shared_ptr<const Tessellation> t) {
  return ising_family(t, 0.0, 0.0);
}

/// Independent random positive diagonal table per edge.
inline std::shared_ptr<const AmplitudeFamily> random_diagonal_family(std::shared_ptr<const Tessellation> t,
                                                                     Rng& rng) {
  SiteModel sites(2);
  auto edge = [&](VertexId y, VertexId x) {
    EdgeSpec e;
    e.mode = EdgeMode::Diagonal;
    for (int i = 0; i < 4; ++i) e.table.push_back(Complex(rng.uniform(0.2, 2.0), rng.uniform(-0.5, 0.5)));
    return build_edge_amplitude(e, y, x, sites);
  };
  return std::make_shared<const AmplitudeFamily>(t, sites, edge, "diagonal");
}

/// Random diagonal tables conjugated by one shared random unitary per
/// family.
inline std::shared_ptr<const AmplitudeFamily> random_conjugated_family(std::shared_ptr<const Tessellation> t,
                                                                       Rng& rng) {
  SiteModel sites(2);
  const Operator::Matrix u = random_unitary(rng, 2);
  auto edge = [&](VertexId y, VertexId x) {
    EdgeSpec e;
    e.mode = EdgeMode::Conjugated;
    e.unitary = u;
    for (int i = 0; i < 4; ++i) e.table.push_back(Complex(rng.uniform(0.2, 2.0), rng.uniform(-0.5, 0.5)));
    return build_edge_amplitude(e, y, x, sites);
  };
  return std::make_shared<const AmplitudeFamily>(t, sites, edge, "conjugated");
}

inline State maximally_mixed() { return State(SiteModel(2)); }

}  // namespace fixtures
