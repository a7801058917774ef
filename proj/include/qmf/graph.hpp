#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmf/error.hpp"

namespace qmf {

/// A vertex label: an integer tuple for lattices, a string for explicit
/// graphs and trees. Ordered lexicographically (coordinates, then name).
class Vertex {
 public:
  Vertex() = default;
  explicit Vertex(std::vector<std::int64_t> coords) : coords_(std::move(coords)) {}
  explicit Vertex(std::string name) : name_(std::move(name)) {}

  const std::vector<std::int64_t>& coords() const { return coords_; }
  const std::string& name() const { return name_; }
  bool is_tuple() const { return name_.empty(); }

  /// Compact text form: "1,-2" for tuples, the name otherwise.
  std::string key() const;
  nlohmann::json to_json() const;

  auto operator<=>(const Vertex&) const = default;
  bool operator==(const Vertex&) const = default;

 private:
  std::vector<std::int64_t> coords_;
  std::string name_;
};

enum class UniverseKind { Explicit, Lattice, RegularTree };

/// Lazy neighbor oracle over a countable vertex universe.
class GraphProvider {
 public:
  virtual ~GraphProvider() = default;
  virtual UniverseKind kind() const = 0;
  /// Sorted, duplicate-free neighbor list.
  virtual std::vector<Vertex> neighbors(const Vertex& v) const = 0;
  virtual bool contains(const Vertex& v) const = 0;
  virtual bool finite() const = 0;
  /// Parses a label given in the provider's JSON form (or its key string).
  virtual Vertex parse(const nlohmann::json& label) const = 0;
  virtual nlohmann::json describe() const = 0;
};

/// Z^dim with nearest-neighbor edges.
class LatticeGraph final : public GraphProvider {
 public:
  explicit LatticeGraph(int dim);
  UniverseKind kind() const override { return UniverseKind::Lattice; }
  std::vector<Vertex> neighbors(const Vertex& v) const override;
  bool contains(const Vertex& v) const override;
  bool finite() const override { return false; }
  Vertex parse(const nlohmann::json& label) const override;
  nlohmann::json describe() const override;
  int dim() const { return dim_; }

 private:
  int dim_;
};

/// The infinite k-regular tree. Vertices are path strings: "r" is the root,
/// "r.0".."r.<k-1>" its children, and every other vertex has k-1 children.
class RegularTree final : public GraphProvider {
 public:
  explicit RegularTree(int degree);
  UniverseKind kind() const override { return UniverseKind::RegularTree; }
  std::vector<Vertex> neighbors(const Vertex& v) const override;
  bool contains(const Vertex& v) const override;
  bool finite() const override { return false; }
  Vertex parse(const nlohmann::json& label) const override;
  nlohmann::json describe() const override;
  int degree() const { return degree_; }

 private:
  int degree_;
};

/// A finite undirected simple graph given by an edge list of string labels.
class ExplicitGraph final : public GraphProvider {
 public:
  explicit ExplicitGraph(const std::vector<std::pair<std::string, std::string>>& edges);
  UniverseKind kind() const override { return UniverseKind::Explicit; }
  std::vector<Vertex> neighbors(const Vertex& v) const override;
  bool contains(const Vertex& v) const override;
  bool finite() const override { return true; }
  Vertex parse(const nlohmann::json& label) const override;
  nlohmann::json describe() const override;

 private:
  std::vector<std::pair<std::string, std::string>> edges_;
  std::map<Vertex, std::vector<Vertex>> adjacency_;
};

/// Builds a provider from {"type":"lattice","dim":d} | {"type":"tree","degree":k}
/// | {"type":"explicit","edges":[["a","b"],...]}.
std::shared_ptr<const GraphProvider> make_graph(const nlohmann::json& spec);

using VertexId = int;

/// Sorted set of window vertex ids. Ids follow the canonical vertex order,
/// so a Region is also a sorted site list for operators.
class Region {
 public:
  Region() = default;
  Region(std::initializer_list<VertexId> ids) : Region(std::vector<VertexId>(ids)) {}
  explicit Region(std::vector<VertexId> ids);

  const std::vector<VertexId>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(VertexId v) const;
  bool includes(const Region& other) const;
  bool intersects(const Region& other) const;
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  bool operator==(const Region&) const = default;

 private:
  std::vector<VertexId> ids_;
};

Region operator|(const Region& a, const Region& b);
Region operator&(const Region& a, const Region& b);
Region operator-(const Region& a, const Region& b);

/// A finite window of a (possibly infinite) graph: the ball of the given
/// radius around a root, with canonical vertex order (BFS layer from the
/// root, label as tie-break).
class GraphWindow {
 public:
  /// `radius` < 0 materializes the whole (finite) graph.
  static GraphWindow materialize(std::shared_ptr<const GraphProvider> provider,
                                 const Vertex& root, int radius);

  std::size_t size() const { return vertices_.size(); }
  const Vertex& vertex(VertexId id) const { return vertices_.at(static_cast<std::size_t>(id)); }
  std::optional<VertexId> find(const Vertex& v) const;
  VertexId id(const Vertex& v) const;  // throws vertex-outside-window
  int layer(VertexId id) const { return layers_.at(static_cast<std::size_t>(id)); }
  int radius() const { return radius_; }
  VertexId root() const { return 0; }
  const GraphProvider& provider() const { return *provider_; }

  /// N_v ∩ window, in canonical order.
  const std::vector<VertexId>& neighbors(VertexId id) const;
  /// True when every neighbor of `id` lies in the window, so N_id is exact.
  bool complete(VertexId id) const { return complete_.at(static_cast<std::size_t>(id)); }
  bool adjacent(VertexId a, VertexId b) const;

  Region all() const;
  Region complete_vertices() const;
  std::vector<Vertex> labels(const Region& r) const;
  nlohmann::json to_json(const Region& r) const;
  Region parse_region(const nlohmann::json& labels) const;

 private:
  std::shared_ptr<const GraphProvider> provider_;
  int radius_ = 0;
  std::vector<Vertex> vertices_;
  std::map<Vertex, VertexId> index_;
  std::vector<int> layers_;
  std::vector<std::vector<VertexId>> neighbors_;
  std::vector<bool> complete_;
};

/// Sorted neighbor labels of `v` inside the window.
std::vector<Vertex> neighbors_window(const GraphWindow& graph, const Vertex& v);

struct RegionParts {
  Region boundary;
  Region interior;
  Region external_boundary;
  Region closure;
  Region complement;  // relative to the window
};

/// Boundary, interior, external boundary, closure and window complement of
/// Λ. Throws region-touches-window-edge when a vertex of Λ has neighbors
/// outside the window (the closure could not be certified).
RegionParts region_parts(const GraphWindow& graph, const Region& region);

Region boundary(const GraphWindow& graph, const Region& region);
Region external_boundary(const GraphWindow& graph, const Region& region);
Region closure(const GraphWindow& graph, const Region& region);

}  // namespace qmf
