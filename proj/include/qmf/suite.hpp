#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qmf/markov_field.hpp"
#include "qmf/random.hpp"
#include "qmf/report.hpp"

namespace qmf {

/// Size limits for sampled instances; keeps dense products, Choi matrices
/// and oracle enumerations tractable.
struct InstanceLimits {
  std::size_t dense_sites = 12;
  Index choi_dimension = 1024;  // d_in · d_out
  Index oracle_configurations = 1024;
  int attempts = 400;
};

/// Number of seeded instances per check.
struct SuiteCounts {
  int region = 20;
  int factorization = 20;
  int localization = 20;
  int descriptors = 10;
  int stationarity = 30;
  int projectivity = 5;
  int projectivity_steps = 3;
  int oracle = 20;

  nlohmann::json to_json() const;
  /// Unknown keys throw malformed-config.
  static SuiteCounts from_json(const nlohmann::json& j);
};

bool is_certifiable(const Tessellation& t, const Region& region);

/// Vertices v with {v} certifiable.
Region certifiable_vertices(const Tessellation& t);

/// Connected region of up to `size` vertices grown from a random start in
/// `pool`, staying inside `pool`.
Region random_connected_region(const GraphWindow& g, const Region& pool, std::size_t size, Rng& rng);

/// closure(Λ) plus the centers on its external boundary: the smallest next
/// region whose external boundary avoids V₀.
Region admissible_successor(const Tessellation& t, const Region& region);

/// Folds per-instance reports of one check into a single record with the
/// worst residual; the witness keeps the worst instance.
VerificationReport aggregate(const std::string& check, const std::string& anchor,
                             const std::vector<VerificationReport>& parts);

VerificationReport region_density_suite(const MarkovField& field, const Rng& rng, int count,
                                        const InstanceLimits& limits = {});
VerificationReport factorization_suite(const MarkovField& field, const Rng& rng, int count,
                                       const InstanceLimits& limits = {});
VerificationReport localization_suite(const MarkovField& field, const Rng& rng, int count,
                                      const InstanceLimits& limits = {});
/// Unitality, complete positivity and module property, each aggregated.
std::vector<VerificationReport> quasi_cond_expectation_suite(const MarkovField& field, const Rng& rng,
                                                             int count, const InstanceLimits& limits = {});
VerificationReport stationarity_suite(const MarkovField& field, const Rng& rng, int count,
                                      const InstanceLimits& limits = {});
VerificationReport projectivity_suite(const MarkovField& field, const Rng& rng, int count, int steps,
                                      const InstanceLimits& limits = {});
/// Diagonal families only.
VerificationReport oracle_suite(const MarkovField& field, const Rng& rng, int count,
                                const InstanceLimits& limits = {});

/// Every field-level check: plaquette density, then the suites above in
/// declaration order. Oracle comparisons run only for diagonal inputs.
std::vector<VerificationReport> field_suite(const MarkovField& field, const Rng& rng,
                                            const SuiteCounts& counts, const InstanceLimits& limits = {});

}  // namespace qmf
