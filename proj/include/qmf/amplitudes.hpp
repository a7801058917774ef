#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmf/local_operator.hpp"
#include "qmf/product_state.hpp"
#include "qmf/report.hpp"
#include "qmf/tessellation.hpp"

namespace qmf {

enum class EdgeMode { Diagonal, Ising, Conjugated, Custom };

std::string to_string(EdgeMode mode);

/// Recipe for one edge operator K̃_(x,y), x a neighbor of the center y.
/// Tables and matrices are indexed |s_x s_y⟩ (neighbor digit first).
struct EdgeSpec {
  EdgeMode mode = EdgeMode::Ising;
  std::vector<Complex> table;  // diagonal entries; Diagonal, or Conjugated with a table
  double J = 0.0;              // Ising, or Conjugated without a table
  double h_center = 0.0;
  double h_neighbor = 0.0;
  Operator::Matrix unitary;  // Conjugated: the per-site U; empty means Hadamard
  Operator::Matrix matrix;   // Custom

  static EdgeSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// A default edge recipe plus per-edge overrides keyed by (center, neighbor)
/// vertex keys.
struct AmplitudeSpec {
  EdgeSpec default_edge;
  std::map<std::pair<std::string, std::string>, EdgeSpec> overrides;

  static AmplitudeSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Ising edge value exp(J s_x s_y + h_x s_x + h_y s_y) for basis indices
/// (spin +1 is index 0, spin -1 is index 1).
double ising_weight(double J, double h_neighbor, double h_center, int index_x, int index_y);

/// K̃_(x,y) on {x, y} following `spec`. Throws non-invertible-spec for a
/// vanishing diagonal entry and malformed-table for shape errors.
Operator build_edge_amplitude(const EdgeSpec& spec, VertexId center, VertexId neighbor,
                              const SiteModel& sites, double invertibility_floor = 1e-8);

/// The edge operators K̃_(x,y) for every center y with a certified plaquette
/// and every x ∈ N_y.
class AmplitudeFamily {
 public:
  using EdgeKey = std::pair<VertexId, VertexId>;  // (center, neighbor)
  using EdgeFunction = std::function<Operator(VertexId center, VertexId neighbor)>;

  /// Refuses tessellations whose centers are not pairwise non-adjacent.
  AmplitudeFamily(std::shared_ptr<const Tessellation> t, SiteModel sites, EdgeFunction edge,
                  std::string mode = "custom");

  static AmplitudeFamily from_spec(std::shared_ptr<const Tessellation> t, SiteModel sites,
                                   const AmplitudeSpec& spec, double invertibility_floor = 1e-8);

  const Tessellation& tessellation() const { return *tessellation_; }
  std::shared_ptr<const Tessellation> tessellation_ptr() const { return tessellation_; }
  const SiteModel& sites() const { return sites_; }
  const std::string& mode() const { return mode_; }

  const std::vector<VertexId>& centers() const { return centers_; }
  bool has_plaquette(VertexId y) const;
  const Operator& edge(VertexId center, VertexId neighbor) const;
  const std::map<EdgeKey, Operator>& edges() const { return edges_; }

  /// ∏_{x ∈ N_y} K̃_(x,y) in canonical x order, on {y} ∪ N_y.
  Operator edge_product(VertexId y) const;

  bool is_diagonal(double tol = 0.0) const;

 private:
  std::shared_ptr<const Tessellation> tessellation_;
  SiteModel sites_;
  std::string mode_;
  std::vector<VertexId> centers_;
  std::map<EdgeKey, Operator> edges_;
};

/// Invertibility, commutativity and commutant certificates.
struct FamilyCertificate {
  VerificationReport invertibility;
  VerificationReport commutativity;
  VerificationReport commutant;

  bool ok() const { return invertibility.pass && commutativity.pass && commutant.pass; }
  std::vector<VerificationReport> reports() const { return {invertibility, commutativity, commutant}; }
};

/// Certifies the family. Only pairs with overlapping supports are tested;
/// disjoint pairs commute exactly. The commutant check needs the normalizers
/// and therefore the state.
FamilyCertificate verify_family(const AmplitudeFamily& f, const State& state,
                                const Tolerances& tol = {});

/// B = E⁰ over {y} of |∏ K̃_(x,y)|², supported on N_y.
Operator compute_plaquette_normalizer(const AmplitudeFamily& f, VertexId y, const State& state);

struct Plaquette {
  VertexId center = 0;
  Operator normalizer;          // B on N_y
  double normalizer_min_eigenvalue = 0.0;
  Operator amplitude;           // (∏ K̃)·B^{-1/2} on {y} ∪ N_y
  double normalization_residual = 0.0;  // max |E⁰_y(K*K) − id|
};

/// Throws eigenvalue-below-floor when B is not safely invertible and
/// normalization-residual when E⁰_y(K*K) misses the identity by more than
/// tol.conddensity.
Plaquette build_plaquette_amplitude(const AmplitudeFamily& f, VertexId y, const State& state,
                                    const Tolerances& tol = {});

/// All plaquette amplitudes of a family under one state, computed once.
class PlaquetteSet {
 public:
  PlaquetteSet(std::shared_ptr<const AmplitudeFamily> f, State state, Tolerances tol = {});

  const AmplitudeFamily& family() const { return *family_; }
  const Tessellation& tessellation() const { return family_->tessellation(); }
  const State& state() const { return state_; }
  const Tolerances& tolerances() const { return tol_; }
  const Plaquette& at(VertexId y) const;
  const std::map<VertexId, Plaquette>& all() const { return plaquettes_; }

 private:
  std::shared_ptr<const AmplitudeFamily> family_;
  State state_;
  Tolerances tol_;
  std::map<VertexId, Plaquette> plaquettes_;
};

/// K over Λ ∪ ∂⃗₀Λ as the canonical-order product of plaquette amplitudes.
struct RegionAmplitude {
  Region region;
  Region support;                // Λ ∪ ∂⃗₀Λ
  std::vector<VertexId> centers;  // Λ ∩ V₀, canonical order
  std::vector<Operator> factors;
  bool v0_confined = true;  // support ∩ V₀ ⊆ Λ

  /// Dense product of the factors; the scalar identity when there are none.
  Operator product() const;
};

RegionAmplitude build_region_amplitude(const PlaquetteSet& p, const Region& region);

/// max |E⁰ over Λ∩V₀ of K*K − id| for the amplitude of Λ.
double region_density_residual(const PlaquetteSet& p, const RegionAmplitude& k);

/// max |K(forward order) − K(reversed order)| for a region amplitude.
/// Dense; throws dimension-cap when the support is too large.
double factor_order_residual(const RegionAmplitude& k, const SiteModel& sites, Index dimension_cap = 8192);

}  // namespace qmf
