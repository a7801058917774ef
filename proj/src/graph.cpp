#include "qmf/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

namespace qmf {

std::string Vertex::key() const {
  if (!is_tuple()) return name_;
  std::string s;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(coords_[i]);
  }
  return s;
}

nlohmann::json Vertex::to_json() const {
  if (!is_tuple()) return name_;
  return coords_;
}

// ---------------------------------------------------------------------------
// Providers

LatticeGraph::LatticeGraph(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidGraph, "lattice dimension must be >= 1");
}

std::vector<Vertex> LatticeGraph::neighbors(const Vertex& v) const {
  if (!contains(v)) throw Error(ErrorCode::InvalidGraph, "not a lattice vertex: " + v.key());
  std::vector<Vertex> out;
  for (int i = 0; i < dim_; ++i) {
    for (int step : {-1, 1}) {
      auto c = v.coords();
      c[static_cast<std::size_t>(i)] += step;
      out.emplace_back(std::move(c));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool LatticeGraph::contains(const Vertex& v) const {
  return v.is_tuple() && v.coords().size() == static_cast<std::size_t>(dim_);
}

Vertex LatticeGraph::parse(const nlohmann::json& label) const {
  std::vector<std::int64_t> coords;
  if (label.is_array()) {
    for (const auto& c : label) {
      if (!c.is_number_integer()) throw Error(ErrorCode::MalformedConfig, "lattice label " + label.dump());
      coords.push_back(c.get<std::int64_t>());
    }
  } else if (label.is_number_integer() && dim_ == 1) {
    coords.push_back(label.get<std::int64_t>());
  } else if (label.is_string()) {
    const auto s = label.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        std::size_t used = 0;
        coords.push_back(std::stoll(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedConfig, "lattice label " + label.dump());
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    throw Error(ErrorCode::MalformedConfig, "lattice label " + label.dump());
  }
  Vertex v(std::move(coords));
  if (!contains(v)) throw Error(ErrorCode::MalformedConfig, "lattice label " + label.dump());
  return v;
}

nlohmann::json LatticeGraph::describe() const { return {{"type", "lattice"}, {"dim", dim_}}; }

RegularTree::RegularTree(int degree) : degree_(degree) {
  if (degree < 2) throw Error(ErrorCode::InvalidGraph, "tree degree must be >= 2");
}

bool RegularTree::contains(const Vertex& v) const {
  if (v.is_tuple()) return false;
  const auto& s = v.name();
  if (s.empty() || s[0] != 'r') return false;
  std::size_t i = 1;
  bool at_root = true;
  while (i < s.size()) {
    if (s[i] != '.') return false;
    const std::size_t start = ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start || (i - start > 1 && s[start] == '0')) return false;
    const int child = std::stoi(s.substr(start, i - start));
    if (child >= (at_root ? degree_ : degree_ - 1)) return false;
    at_root = false;
  }
  return true;
}

std::vector<Vertex> RegularTree::neighbors(const Vertex& v) const {
  if (!contains(v)) throw Error(ErrorCode::InvalidGraph, "not a tree vertex: " + v.key());
  const auto& s = v.name();
  std::vector<Vertex> out;
  const bool root = s == "r";
  if (!root) out.emplace_back(s.substr(0, s.rfind('.')));
  const int children = root ? degree_ : degree_ - 1;
  for (int c = 0; c < children; ++c) out.emplace_back(s + "." + std::to_string(c));
  std::sort(out.begin(), out.end());
  return out;
}

Vertex RegularTree::parse(const nlohmann::json& label) const {
  if (!label.is_string()) throw Error(ErrorCode::MalformedConfig, "tree label " + label.dump());
  Vertex v(label.get<std::string>());
  if (!contains(v)) throw Error(ErrorCode::MalformedConfig, "tree label " + label.dump());
  return v;
}

nlohmann::json RegularTree::describe() const { return {{"type", "tree"}, {"degree", degree_}}; }

ExplicitGraph::ExplicitGraph(const std::vector<std::pair<std::string, std::string>>& edges)
    : edges_(edges) {
  std::map<Vertex, std::set<Vertex>> adj;
  for (const auto& [a, b] : edges) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidGraph, "empty vertex label");
    if (a == b) throw Error(ErrorCode::InvalidGraph, "self-loop at " + a);
    adj[Vertex(a)].insert(Vertex(b));
    adj[Vertex(b)].insert(Vertex(a));
  }
  if (adj.empty()) throw Error(ErrorCode::InvalidGraph, "explicit graph has no edges");
  for (auto& [v, ns] : adj) adjacency_[v] = std::vector<Vertex>(ns.begin(), ns.end());
}

std::vector<Vertex> ExplicitGraph::neighbors(const Vertex& v) const {
  auto it = adjacency_.find(v);
  if (it == adjacency_.end()) throw Error(ErrorCode::InvalidGraph, "unknown vertex " + v.key());
  return it->second;
}

bool ExplicitGraph::contains(const Vertex& v) const { return adjacency_.contains(v); }

Vertex ExplicitGraph::parse(const nlohmann::json& label) const {
  if (!label.is_string()) throw Error(ErrorCode::MalformedConfig, "explicit label " + label.dump());
  Vertex v(label.get<std::string>());
  if (!contains(v)) throw Error(ErrorCode::MalformedConfig, "unknown vertex " + label.dump());
  return v;
}

nlohmann::json ExplicitGraph::describe() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : edges_) edges.push_back({a, b});
  return {{"type", "explicit"}, {"edges", edges}};
}

std::shared_ptr<const GraphProvider> make_graph(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("type") || !spec["type"].is_string()) {
    throw Error(ErrorCode::MalformedConfig, "graph: missing \"type\"");
  }
  const auto type = spec["type"].get<std::string>();
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, _] : spec.items()) {
      if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) ==
          allowed.end()) {
        throw Error(ErrorCode::MalformedConfig, "graph: unknown key \"" + k + "\"");
      }
    }
  };
  if (type == "lattice") {
    reject_unknown({"type", "dim"});
    if (!spec.contains("dim") || !spec["dim"].is_number_integer()) {
      throw Error(ErrorCode::MalformedConfig, "graph.dim: integer required");
    }
    return std::make_shared<LatticeGraph>(spec["dim"].get<int>());
  }
  if (type == "tree") {
    reject_unknown({"type", "degree"});
    if (!spec.contains("degree") || !spec["degree"].is_number_integer()) {
      throw Error(ErrorCode::MalformedConfig, "graph.degree: integer required");
    }
    return std::make_shared<RegularTree>(spec["degree"].get<int>());
  }
  if (type == "explicit") {
    reject_unknown({"type", "edges"});
    if (!spec.contains("edges") || !spec["edges"].is_array()) {
      throw Error(ErrorCode::MalformedConfig, "graph.edges: array required");
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : spec["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw Error(ErrorCode::MalformedConfig, "graph.edges: pair of labels expected, got " + e.dump());
      }
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return std::make_shared<ExplicitGraph>(edges);
  }
  throw Error(ErrorCode::MalformedConfig, "graph.type: unknown \"" + type + "\"");
}

// ---------------------------------------------------------------------------
// Region

Region::Region(std::vector<VertexId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool Region::contains(VertexId v) const { return std::binary_search(ids_.begin(), ids_.end(), v); }

bool Region::includes(const Region& other) const {
  return std::includes(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end());
}

bool Region::intersects(const Region& other) const { return !(*this & other).empty(); }

Region operator|(const Region& a, const Region& b) {
  std::vector<VertexId> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Region(std::move(out));
}

Region operator&(const Region& a, const Region& b) {
  std::vector<VertexId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Region(std::move(out));
}

Region operator-(const Region& a, const Region& b) {
  std::vector<VertexId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Region(std::move(out));
}

// ---------------------------------------------------------------------------
// Window

GraphWindow GraphWindow::materialize(std::shared_ptr<const GraphProvider> provider,
                                     const Vertex& root, int radius) {
  if (!provider->contains(root)) {
    throw Error(ErrorCode::RootOutsideWindow, "root " + root.key() + " is not a graph vertex");
  }
  std::map<Vertex, int> dist{{root, 0}};
  std::deque<Vertex> queue{root};
  std::map<Vertex, std::vector<Vertex>> oracle;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    const int d = dist[v];
    auto ns = provider->neighbors(v);
    if (radius < 0 || d < radius) {
      for (const auto& n : ns) {
        if (!dist.contains(n)) {
          dist[n] = d + 1;
          queue.push_back(n);
        }
      }
    }
    oracle[v] = std::move(ns);
  }

  GraphWindow w;
  w.provider_ = std::move(provider);
  w.radius_ = radius;
  std::vector<std::pair<int, Vertex>> order;
  order.reserve(dist.size());
  for (const auto& [v, d] : dist) order.emplace_back(d, v);
  std::sort(order.begin(), order.end());
  for (const auto& [d, v] : order) {
    w.index_[v] = static_cast<VertexId>(w.vertices_.size());
    w.vertices_.push_back(v);
    w.layers_.push_back(d);
  }
  w.neighbors_.resize(w.vertices_.size());
  w.complete_.resize(w.vertices_.size());
  for (std::size_t i = 0; i < w.vertices_.size(); ++i) {
    const auto& v = w.vertices_[i];
    bool complete = true;
    for (const auto& n : oracle[v]) {
      if (n == v) throw Error(ErrorCode::InvalidGraph, "self-loop at " + v.key());
      auto it = w.index_.find(n);
      if (it == w.index_.end()) {
        complete = false;
      } else {
        w.neighbors_[i].push_back(it->second);
      }
    }
    std::sort(w.neighbors_[i].begin(), w.neighbors_[i].end());
    w.complete_[i] = complete;
  }
  for (std::size_t i = 0; i < w.vertices_.size(); ++i) {
    for (VertexId n : w.neighbors_[i]) {
      const auto& back = w.neighbors_[static_cast<std::size_t>(n)];
      if (!std::binary_search(back.begin(), back.end(), static_cast<VertexId>(i))) {
        throw Error(ErrorCode::InvalidGraph, "asymmetric adjacency " + w.vertices_[i].key() +
                                                 " -> " + w.vertices_[static_cast<std::size_t>(n)].key());
      }
    }
  }
  return w;
}

std::optional<VertexId> GraphWindow::find(const Vertex& v) const {
  auto it = index_.find(v);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VertexId GraphWindow::id(const Vertex& v) const {
  auto f = find(v);
  if (!f) throw Error(ErrorCode::VertexOutsideWindow, v.key());
  return *f;
}

const std::vector<VertexId>& GraphWindow::neighbors(VertexId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= neighbors_.size()) {
    throw Error(ErrorCode::VertexOutsideWindow, "id " + std::to_string(id));
  }
  return neighbors_[static_cast<std::size_t>(id)];
}

bool GraphWindow::adjacent(VertexId a, VertexId b) const {
  const auto& ns = neighbors(a);
  return std::binary_search(ns.begin(), ns.end(), b);
}

Region GraphWindow::all() const {
  std::vector<VertexId> ids(vertices_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<VertexId>(i);
  return Region(std::move(ids));
}

Region GraphWindow::complete_vertices() const {
  std::vector<VertexId> ids;
  for (std::size_t i = 0; i < complete_.size(); ++i)
    if (complete_[i]) ids.push_back(static_cast<VertexId>(i));
  return Region(std::move(ids));
}

std::vector<Vertex> GraphWindow::labels(const Region& r) const {
  std::vector<Vertex> out;
  for (VertexId v : r) out.push_back(vertex(v));
  return out;
}

nlohmann::json GraphWindow::to_json(const Region& r) const {
  nlohmann::json out = nlohmann::json::array();
  for (VertexId v : r) out.push_back(vertex(v).to_json());
  return out;
}

Region GraphWindow::parse_region(const nlohmann::json& labels) const {
  if (!labels.is_array()) throw Error(ErrorCode::MalformedConfig, "region must be a label array");
  std::vector<VertexId> ids;
  for (const auto& l : labels) ids.push_back(id(provider_->parse(l)));
  return Region(std::move(ids));
}

std::vector<Vertex> neighbors_window(const GraphWindow& graph, const Vertex& v) {
  std::vector<Vertex> out;
  for (VertexId n : graph.neighbors(graph.id(v))) out.push_back(graph.vertex(n));
  return out;
}

namespace {

void require_complete(const GraphWindow& graph, const Region& region) {
  for (VertexId v : region) {
    if (v < 0 || static_cast<std::size_t>(v) >= graph.size()) {
      throw Error(ErrorCode::VertexOutsideWindow, "id " + std::to_string(v));
    }
    if (!graph.complete(v)) {
      throw Error(ErrorCode::RegionTouchesWindowEdge,
                  "vertex " + graph.vertex(v).key() + " has neighbors outside the window");
    }
  }
}

}  // namespace

Region boundary(const GraphWindow& graph, const Region& region) {
  require_complete(graph, region);
  std::vector<VertexId> out;
  for (VertexId v : region) {
    for (VertexId n : graph.neighbors(v)) {
      if (!region.contains(n)) {
        out.push_back(v);
        break;
      }
    }
  }
  return Region(std::move(out));
}

Region external_boundary(const GraphWindow& graph, const Region& region) {
  require_complete(graph, region);
  std::vector<VertexId> out;
  for (VertexId v : region)
    for (VertexId n : graph.neighbors(v))
      if (!region.contains(n)) out.push_back(n);
  return Region(std::move(out));
}

Region closure(const GraphWindow& graph, const Region& region) {
  return region | external_boundary(graph, region);
}

RegionParts region_parts(const GraphWindow& graph, const Region& region) {
  RegionParts parts;
  parts.boundary = boundary(graph, region);
  parts.interior = region - parts.boundary;
  parts.external_boundary = external_boundary(graph, region);
  parts.closure = region | parts.external_boundary;
  parts.complement = graph.all() - region;
  return parts;
}

}  // namespace qmf
