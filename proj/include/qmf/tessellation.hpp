#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmf/graph.hpp"

namespace qmf {

enum class RepairMode { Off, GreedyIndependent };

std::string to_string(RepairMode mode);
RepairMode parse_repair_mode(const std::string& s);

/// One level of the inductive construction: V_{0,n} and V_n.
struct TessellationLevel {
  Region centers;     // V_{0,n}
  Region plaquettes;  // V_n = ∪_{y ∈ V_{0,n}} {y} ∪ N_y
};

struct Diagnostic {
  bool ok = true;
  std::size_t violations = 0;
  nlohmann::json witness;  // null when ok
};

struct TessellationDiagnostics {
  Diagnostic inner_boundary;  // ∂V_n ∩ V₀ = ∅
  Diagnostic independence;    // V₀ pairwise non-adjacent
  Diagnostic coverage;        // certified domain covered by plaquettes
  Diagnostic growth;          // |V_{n+1}| ≥ |V_n|+2, |V_{0,n+1}| ≥ |V_{0,n}|+1

  bool all_ok() const {
    return inner_boundary.ok && independence.ok && coverage.ok && growth.ok;
  }
};

/// Tessellation of a graph window around a root.
///
/// Levels are exact: construction stops before any V_n would need a vertex
/// whose neighborhood is not fully inside the window. With N computed
/// levels, the center set V_{0,N+1} is exact and membership in V₀ is known
/// on the certified domain closure(V_N).
class Tessellation {
 public:
  const GraphWindow& graph() const { return *graph_; }
  std::shared_ptr<const GraphWindow> graph_ptr() const { return graph_; }
  VertexId root() const { return root_; }
  RepairMode repair() const { return repair_; }
  /// True when the greedy repair dropped at least one vertex.
  bool repaired() const { return repaired_; }

  const std::vector<TessellationLevel>& levels() const { return levels_; }
  /// V₀ restricted to the certified domain.
  const Region& centers() const { return centers_; }
  bool is_center(VertexId v) const { return centers_.contains(v); }
  /// closure(V_N): the vertices whose V₀ membership is known.
  const Region& certified() const { return certified_; }
  /// y → {y} ∪ N_y for every center with a complete neighborhood.
  const std::map<VertexId, Region>& plaquette_map() const { return plaquettes_; }
  const Region& plaquette(VertexId y) const;

  const TessellationDiagnostics& diagnostics() const { return diagnostics_; }

  /// Throws region-touches-window-edge unless every vertex of Λ has a
  /// complete neighborhood and closure(Λ) lies in the certified domain.
  void certify(const Region& region) const;

  nlohmann::json to_json() const;

 private:
  friend Tessellation build_tessellation(std::shared_ptr<const GraphWindow>, const Vertex&, int,
                                         RepairMode);

  std::shared_ptr<const GraphWindow> graph_;
  VertexId root_ = 0;
  RepairMode repair_ = RepairMode::Off;
  bool repaired_ = false;
  std::vector<TessellationLevel> levels_;
  Region centers_;
  Region certified_;
  std::map<VertexId, Region> plaquettes_;
  TessellationDiagnostics diagnostics_;
};

/// Runs the level induction from `root` up to `max_level` levels (fewer when
/// the window edge is reached or a finite graph is exhausted). Diagnostics
/// are populated; a failed independence check is reported, not thrown.
Tessellation build_tessellation(std::shared_ptr<const GraphWindow> graph, const Vertex& root,
                                int max_level, RepairMode repair = RepairMode::Off);

/// Recomputes the four diagnostics of `t` against `graph`.
TessellationDiagnostics check_tessellation(const Tessellation& t, const GraphWindow& graph);

/// ∂⃗₀Λ = ∪_{y ∈ ∂Λ ∩ V₀} N_y (may intersect Λ).
Region dext0(const Tessellation& t, const Region& region);

/// Λ ∪ ∂⃗₀Λ, the support set of region amplitudes.
Region amplitude_support(const Tessellation& t, const Region& region);

/// Λ ∩ V₀.
Region centers_in(const Tessellation& t, const Region& region);

}  // namespace qmf
