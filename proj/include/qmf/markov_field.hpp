#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qmf/amplitudes.hpp"
#include "qmf/random.hpp"
#include "qmf/report.hpp"
#include "qmf/sweep.hpp"
#include "qmf/tessellation.hpp"

namespace qmf {

struct FieldOptions {
  /// Refuse families whose certificate fails.
  bool require_certified = true;
};

/// Finite-volume states and quasi-conditional expectations built from a
/// certified amplitude family and a product state.
class MarkovField {
 public:
  MarkovField(std::shared_ptr<const AmplitudeFamily> family, State state, Tolerances tol = {},
              FieldOptions options = {});

  const AmplitudeFamily& family() const { return plaquettes_->family(); }
  const Tessellation& tessellation() const { return family().tessellation(); }
  const GraphWindow& graph() const { return tessellation().graph(); }
  const State& state() const { return plaquettes_->state(); }
  const Tolerances& tolerances() const { return plaquettes_->tolerances(); }
  const PlaquetteSet& plaquettes() const { return *plaquettes_; }
  const FamilyCertificate& certificate() const { return certificate_; }
  Index dimension_cap() const { return static_cast<Index>(tolerances().dimension_cap); }

  RegionAmplitude amplitude(const Region& region) const;

  /// E⁰ over `traced` of K*·a·K for the given amplitude (sweep evaluation).
  Operator conjugate_and_trace(const RegionAmplitude& k, const Operator& a,
                               const std::vector<Site>& traced, Index* peak = nullptr) const;

  /// φ̃_Λ(a) = φ⁰(K*·a·K), K the amplitude of Λ.
  Complex finite_volume_state(const Region& region, const Operator& a) const;

  /// Same value from the explicit product K and a full dense trace; for
  /// cross-checks on small supports.
  Complex finite_volume_state_dense(const Region& region, const Operator& a) const;

  /// a ↦ E⁰_y(K_y*·a·K_y) for one center y.
  Operator plaquette_map(VertexId y, const Operator& a) const;

 private:
  std::shared_ptr<const PlaquetteSet> plaquettes_;
  FamilyCertificate certificate_;
};

/// E_{Λ1,Λ2}: conditioning of A_{Λ2} onto A_{closure(Λ1)}.
struct QuasiCondExpDescriptor {
  Region lambda1;
  Region lambda2;
  Region closure1;   // closure(Λ1)
  Region trace_set;  // D = Λ2 \ closure(Λ1)
  RegionAmplitude conjugator;  // amplitude of D

  /// Throws descriptor-precondition unless closure(Λ1) ⊆ Λ2.
  static QuasiCondExpDescriptor make(const MarkovField& field, const Region& lambda1,
                                     const Region& lambda2);
  nlohmann::json to_json(const GraphWindow& g) const;
};

struct QceResult {
  Operator value;
  Region output_support;  // after dropping identity factors
  bool contained = true;  // output_support ⊆ closure(Λ1)
};

QceResult quasi_cond_expectation(const MarkovField& field, const QuasiCondExpDescriptor& d,
                                 const Operator& a);

/// Unitality, complete positivity (Choi matrix of the map restricted to
/// A_{Λ2}) and the A_{Λ1}-module property over all matrix units of A_{Λ1}.
std::vector<VerificationReport> verify_quasi_cond_expectation(const MarkovField& field,
                                                              const QuasiCondExpDescriptor& d,
                                                              Rng& rng);

/// Choi matrix Σ E_ij ⊗ E(E_ij) of the map restricted to A_{Λ2}; rows are
/// (input index, output index) with the input digit most significant.
Operator::Matrix choi_matrix(const MarkovField& field, const QuasiCondExpDescriptor& d,
                             Region* output_sites = nullptr);

/// Plaquette conditional density: max over certified plaquettes.
VerificationReport plaquette_density_check(const MarkovField& field);

/// Region conditional density of the amplitude of Λ.
VerificationReport region_density_check(const MarkovField& field, const Region& region);

/// K_{Λ∪Λ'} against K_Λ·K_Λ'. Requires closure(Λ) ∩ Λ' = ∅.
VerificationReport factorization_check(const MarkovField& field, const Region& lambda,
                                       const Region& lambda_prime);

/// For Λ0 ⊆ closure(Λ0) ⊂ Λ and a ∈ A_{Λ0}: tracing one center z outside
/// closure(Λ0) drops K_z, and tracing all of them leaves the amplitude of
/// closure(Λ0). Both sides are computed by independent routes.
VerificationReport localization_check(const MarkovField& field, const Region& lambda0,
                                      const Region& lambda, const Operator& a);

/// max over `growth` of |φ̃_Λ(a) − φ̃_{closure(Λ0)}(a)| for a ∈ A_{Λ0}.
VerificationReport stationarity_probe(const MarkovField& field, const Region& lambda0,
                                      const std::vector<Region>& growth, const Operator& a);

/// Per-step |φ̃_{Λn}(E_{Λn,Λn+1}(a)) − φ̃_{Λn+1}(a)| and the telescoped
/// composition against φ̃ of the last region. Throws sequence-condition
/// when closure(Λn) ⊄ Λn+1 or ∂⃗Λn meets V₀.
VerificationReport projectivity_check(const MarkovField& field, const std::vector<Region>& sequence,
                                      const Operator& a);

/// Scalar edge value k̃_(x,y)(s_x, s_y) used by the classical oracle.
using EdgeScalar = std::function<Complex(VertexId center, VertexId neighbor, int s_neighbor, int s_center)>;

/// Direct configuration sum Σ_s ∏p(s)·|K(s)|²·g(s) built from scalar edge
/// values; shares no operator code with the field.
Complex classical_oracle(const Tessellation& t, const SiteModel& sites, const State& state,
                         const Region& region, const Operator& g, const EdgeScalar& edge);

/// Reads k̃ from the diagonal of the family's edge operators.
EdgeScalar diagonal_edge_scalar(const AmplitudeFamily& f);

/// |oracle − φ̃_Λ(g)|. Throws non-diagonal-input unless the family, every
/// density and g are diagonal. `edge` defaults to diagonal_edge_scalar.
VerificationReport classical_oracle_compare(const MarkovField& field, const Region& region,
                                            const Operator& g,
                                            const std::optional<EdgeScalar>& edge = std::nullopt);

}  // namespace qmf
