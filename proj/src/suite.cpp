#include "qmf/suite.hpp"

#include <cmath>
#include <optional>

#include "qmf/worker_pool.hpp"

namespace qmf {

namespace {

template <typename T>
T number_field(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer()) throw Error(ErrorCode::MalformedConfig, "suite." + key + " must be an integer");
  return j.get<T>();
}

Operator random_on(Rng& rng, const SiteModel& sites, const Region& r) {
  return random_operator(rng, r.ids(), sites.dims(r.ids()));
}

Region random_subset(const Region& r, double p, Rng& rng) {
  std::vector<VertexId> ids;
  for (VertexId v : r)
    if (rng.uniform() < p) ids.push_back(v);
  return Region(std::move(ids));
}

/// Adds a random half of the certifiable external boundary; nullopt when a
/// vertex of `r` sits on the window edge.
std::optional<Region> grow(const GraphWindow& g, const Region& r, const Region& pool, Rng& rng) {
  for (VertexId v : r)
    if (!g.complete(v)) return std::nullopt;
  return r | random_subset(external_boundary(g, r) & pool, 0.5, rng);
}

Index dimension_of(const MarkovField& field, const Region& r) {
  return detail::product(field.state().site_model().dims(r.ids()));
}

/// Retries `attempt` until it yields a report. Dimension caps and sampling
/// dead ends count as misses; any other error propagates.
template <typename Attempt>
VerificationReport sample(const std::string& check, const Rng& rng, int index, int attempts,
                          Attempt attempt) {
  Rng r = rng.split(static_cast<std::uint64_t>(index));
  for (int k = 0; k < attempts; ++k) {
    try {
      if (auto rep = attempt(r, k)) return *rep;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DimensionCap) throw;
    }
  }
  throw Error(ErrorCode::NoInstance, check + ": no admissible instance after " + std::to_string(attempts) +
                                         " attempts (instance " + std::to_string(index) + ")");
}

template <typename Job>
std::vector<VerificationReport> collect(int count, Job job) {
  return run_jobs(static_cast<std::size_t>(std::max(count, 0)), job);
}

}  // namespace

nlohmann::json SuiteCounts::to_json() const {
  return {{"region", region},
          {"factorization", factorization},
          {"localization", localization},
          {"descriptors", descriptors},
          {"stationarity", stationarity},
          {"projectivity", projectivity},
          {"projectivity_steps", projectivity_steps},
          {"oracle", oracle}};
}

SuiteCounts SuiteCounts::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "suite must be an object");
  SuiteCounts c;
  const std::map<std::string, int*> slots{{"region", &c.region},
                                          {"factorization", &c.factorization},
                                          {"localization", &c.localization},
                                          {"descriptors", &c.descriptors},
                                          {"stationarity", &c.stationarity},
                                          {"projectivity", &c.projectivity},
                                          {"projectivity_steps", &c.projectivity_steps},
                                          {"oracle", &c.oracle}};
  for (const auto& [key, value] : j.items()) {
    auto it = slots.find(key);
    if (it == slots.end()) throw Error(ErrorCode::MalformedConfig, "suite: unknown key '" + key + "'");
    *it->second = number_field<int>(value, key);
    if (*it->second < 0) throw Error(ErrorCode::MalformedConfig, "suite." + key + " must be non-negative");
  }
  if (c.projectivity > 0 && c.projectivity_steps < 1) {
    throw Error(ErrorCode::MalformedConfig, "suite.projectivity_steps must be at least 1");
  }
  return c;
}

bool is_certifiable(const Tessellation& t, const Region& region) {
  try {
    t.certify(region);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RegionTouchesWindowEdge || e.code() == ErrorCode::UncertifiedTessellation) {
      return false;
    }
    throw;
  }
}

Region certifiable_vertices(const Tessellation& t) {
  std::vector<VertexId> ids;
  for (VertexId v : t.graph().all())
    if (is_certifiable(t, Region{v})) ids.push_back(v);
  return Region(std::move(ids));
}

Region random_connected_region(const GraphWindow& g, const Region& pool, std::size_t size, Rng& rng) {
  if (pool.empty() || size == 0) return {};
  std::vector<VertexId> chosen{pool.ids()[static_cast<std::size_t>(rng.uniform_int(0, int(pool.size()) - 1))]};
  Region current(chosen);
  while (current.size() < size) {
    std::vector<VertexId> frontier;
    for (VertexId v : current)
      for (VertexId x : g.neighbors(v))
        if (pool.contains(x) && !current.contains(x)) frontier.push_back(x);
    const Region f(frontier);
    if (f.empty()) break;
    current = current | Region{f.ids()[static_cast<std::size_t>(rng.uniform_int(0, int(f.size()) - 1))]};
  }
  return current;
}

Region admissible_successor(const Tessellation& t, const Region& region) {
  const Region c = closure(t.graph(), region);
  return c | (external_boundary(t.graph(), c) & t.centers());
}

VerificationReport aggregate(const std::string& check, const std::string& anchor,
                             const std::vector<VerificationReport>& parts) {
  double worst = 0.0;
  std::size_t worst_index = 0;
  double tolerance = 0.0;
  double wall = 0.0;
  nlohmann::json residuals = nlohmann::json::array();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double r = parts[i].residual;
    residuals.push_back(std::isnan(r) ? nlohmann::json(nullptr) : nlohmann::json(r));
    tolerance = parts[i].tolerance;
    wall += parts[i].wall_time_ms;
    if (std::isnan(r) || (!std::isnan(worst) && r > worst)) {
      worst = r;
      worst_index = i;
    }
  }
  nlohmann::json w = {{"instances", parts.size()}, {"residuals", residuals}};
  if (!parts.empty()) {
    w["worst_instance"] = worst_index;
    w["worst"] = parts[worst_index].witness;
  }
  VerificationReport out = make_report(check, anchor, worst, tolerance, w);
  out.wall_time_ms = wall;
  return out;
}

VerificationReport region_density_suite(const MarkovField& field, const Rng& rng, int count,
                                        const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const Region pool = certifiable_vertices(t);
  auto parts = collect(count, [&](std::size_t i) {
    return sample("region-density", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region lam = random_connected_region(t.graph(), pool, r.uniform_int(1, 4), r);
                    if (centers_in(t, lam).empty()) return std::nullopt;
                    return region_density_check(field, lam);
                  });
  });
  return aggregate("region-density", "region amplitude is a conditional density", parts);
}

VerificationReport factorization_suite(const MarkovField& field, const Rng& rng, int count,
                                       const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  auto parts = collect(count, [&](std::size_t i) {
    return sample("amplitude-factorization", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region lam = random_connected_region(g, pool, r.uniform_int(1, 3), r);
                    const Region rest = pool - closure(g, lam);
                    const Region lam2 = random_connected_region(g, rest, r.uniform_int(1, 3), r);
                    if (lam2.empty() || centers_in(t, lam).empty() || centers_in(t, lam2).empty()) {
                      return std::nullopt;
                    }
                    if (field.amplitude(lam | lam2).support.size() > limits.dense_sites) return std::nullopt;
                    return factorization_check(field, lam, lam2);
                  });
  });
  return aggregate("amplitude-factorization", "amplitude of separated regions factorizes", parts);
}

VerificationReport localization_suite(const MarkovField& field, const Rng& rng, int count,
                                      const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  const SiteModel& sites = field.state().site_model();
  auto parts = collect(count, [&](std::size_t i) {
    return sample("localization", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region lam0 = random_connected_region(g, pool, r.uniform_int(1, 2), r);
                    const Region c0 = closure(g, lam0);
                    Region lam = c0;
                    for (int layer = 0; layer < 2; ++layer) {
                      const auto next = grow(g, lam, pool, r);
                      if (!next) return std::nullopt;
                      lam = *next;
                    }
                    if (centers_in(t, lam - c0).empty() || !is_certifiable(t, lam)) return std::nullopt;
                    if ((field.amplitude(lam).support | lam0).size() > limits.dense_sites) return std::nullopt;
                    return localization_check(field, lam0, lam, random_on(r, sites, lam0));
                  });
  });
  return aggregate("localization", "tracing outer centers removes their plaquette amplitudes", parts);
}

std::vector<VerificationReport> quasi_cond_expectation_suite(const MarkovField& field, const Rng& rng,
                                                             int count, const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  const auto per_instance = run_jobs(static_cast<std::size_t>(std::max(count, 0)), [&](std::size_t i) {
    std::vector<VerificationReport> reports;
    sample("quasi-conditional-expectation", rng, int(i), limits.attempts,
           [&](Rng& r, int k) -> std::optional<VerificationReport> {
             const Region lam1 = random_connected_region(g, pool, r.uniform() < 0.7 ? 1 : 2, r);
             const Region c1 = closure(g, lam1);
             const auto grown = grow(g, c1, pool, r);
             if (!grown || !is_certifiable(t, *grown)) return std::nullopt;
             const Region& lam2 = *grown;
             const auto d = QuasiCondExpDescriptor::make(field, lam1, lam2);
             // Prefer descriptors that actually conjugate by a plaquette.
             if (k < limits.attempts / 2 && d.conjugator.factors.empty()) return std::nullopt;
             Region out = d.lambda2;
             for (const auto& f : d.conjugator.factors) out = out | Region(f.support());
             out = out - d.trace_set;
             if (dimension_of(field, d.lambda2) * dimension_of(field, out) > limits.choi_dimension) {
               return std::nullopt;
             }
             reports = verify_quasi_cond_expectation(field, d, r);
             return reports.front();
           });
    return reports;
  });
  std::vector<VerificationReport> unit, cp, module;
  for (const auto& reports : per_instance) {
    unit.push_back(reports.at(0));
    cp.push_back(reports.at(1));
    module.push_back(reports.at(2));
  }
  return {aggregate("qce-unitality", "quasi-conditional expectation is unital", unit),
          aggregate("qce-complete-positivity", "Choi matrix is positive semidefinite", cp),
          aggregate("qce-module-property", "inner-region elements factor out", module)};
}

VerificationReport stationarity_suite(const MarkovField& field, const Rng& rng, int count,
                                      const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  const SiteModel& sites = field.state().site_model();
  auto parts = collect(count, [&](std::size_t i) {
    return sample("stationarity", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region lam0 = random_connected_region(g, pool, r.uniform_int(1, 2), r);
                    const Region c0 = closure(g, lam0);
                    const auto g1 = grow(g, c0, pool, r);
                    if (!g1) return std::nullopt;
                    const auto g2 = grow(g, *g1, pool, r);
                    if (!g2 || !is_certifiable(t, *g2)) return std::nullopt;
                    return stationarity_probe(field, lam0, {*g1, *g2}, random_on(r, sites, lam0));
                  });
  });
  return aggregate("stationarity", "finite-volume states agree beyond the closure", parts);
}

VerificationReport projectivity_suite(const MarkovField& field, const Rng& rng, int count, int steps,
                                      const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  const SiteModel& sites = field.state().site_model();
  auto parts = collect(count, [&](std::size_t i) {
    return sample("projectivity", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region start = random_connected_region(g, pool, r.uniform_int(1, 2), r);
                    if ((external_boundary(g, start) & t.centers()).size() > 0) return std::nullopt;
                    std::vector<Region> seq{start};
                    for (int n = 0; n < steps; ++n) {
                      for (VertexId v : closure(g, seq.back()))
                        if (!g.complete(v)) return std::nullopt;
                      seq.push_back(admissible_successor(t, seq.back()));
                      if (!is_certifiable(t, seq.back())) return std::nullopt;
                    }
                    return projectivity_check(field, seq, random_on(r, sites, start));
                  });
  });
  return aggregate("projectivity", "conditioned chain reproduces the larger finite-volume state", parts);
}

VerificationReport oracle_suite(const MarkovField& field, const Rng& rng, int count,
                                const InstanceLimits& limits) {
  const Tessellation& t = field.tessellation();
  const GraphWindow& g = t.graph();
  const Region pool = certifiable_vertices(t);
  const SiteModel& sites = field.state().site_model();
  auto parts = collect(count, [&](std::size_t i) {
    return sample("classical-oracle", rng, int(i), limits.attempts,
                  [&](Rng& r, int) -> std::optional<VerificationReport> {
                    const Region lam = random_connected_region(g, pool, r.uniform_int(1, 6), r);
                    Region obs = random_subset(lam, 0.4, r);
                    if (obs.empty()) obs = Region{lam.ids().front()};
                    Region all = obs;
                    for (VertexId y : centers_in(t, lam)) all = all | t.plaquette(y);
                    if (dimension_of(field, all) > limits.oracle_configurations) return std::nullopt;
                    const Operator gop =
                        random_real_diagonal(r, obs.ids(), sites.dims(obs.ids()), -1.0, 1.0);
                    return classical_oracle_compare(field, lam, gop);
                  });
  });
  return aggregate("classical-oracle", "agrees with a direct configuration sum", parts);
}

std::vector<VerificationReport> field_suite(const MarkovField& field, const Rng& rng,
                                            const SuiteCounts& counts, const InstanceLimits& limits) {
  std::vector<VerificationReport> out{plaquette_density_check(field)};
  if (counts.region > 0) out.push_back(region_density_suite(field, rng.split(1), counts.region, limits));
  if (counts.factorization > 0) {
    out.push_back(factorization_suite(field, rng.split(2), counts.factorization, limits));
  }
  if (counts.localization > 0) {
    out.push_back(localization_suite(field, rng.split(3), counts.localization, limits));
  }
  if (counts.descriptors > 0) {
    for (auto& r : quasi_cond_expectation_suite(field, rng.split(4), counts.descriptors, limits))
      out.push_back(std::move(r));
  }
  if (counts.stationarity > 0) {
    out.push_back(stationarity_suite(field, rng.split(5), counts.stationarity, limits));
  }
  if (counts.projectivity > 0) {
    out.push_back(projectivity_suite(field, rng.split(6), counts.projectivity, counts.projectivity_steps, limits));
  }
  bool diagonal = field.family().is_diagonal();
  for (const auto& [site, rho] : field.state().explicit_densities())
    diagonal = diagonal && (rho - Operator::Matrix(rho.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (counts.oracle > 0 && diagonal) out.push_back(oracle_suite(field, rng.split(7), counts.oracle, limits));
  return out;
}

}  // namespace qmf
