#include "qmf/amplitudes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "qmf/json_io.hpp"
#include "qmf/sweep.hpp"
#include "qmf/worker_pool.hpp"

namespace qmf {

std::string to_string(EdgeMode mode) {
  switch (mode) {
    case EdgeMode::Diagonal: return "diagonal";
    case EdgeMode::Ising: return "ising";
    case EdgeMode::Conjugated: return "conjugated";
    case EdgeMode::Custom: return "custom";
  }
  return "unknown";
}

namespace {

EdgeMode parse_mode(const std::string& s) {
  if (s == "diagonal") return EdgeMode::Diagonal;
  if (s == "ising") return EdgeMode::Ising;
  if (s == "conjugated") return EdgeMode::Conjugated;
  if (s == "custom") return EdgeMode::Custom;
  throw Error(ErrorCode::MalformedConfig, "amplitude.mode: unknown mode '" + s + "'");
}

double number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw Error(ErrorCode::MalformedConfig, "amplitude." + key + " must be a number");
  return j.get<double>();
}

Operator::Matrix hadamard() {
  Operator::Matrix h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

double min_singular_value(const Operator::Matrix& m) {
  Eigen::JacobiSVD<Operator::Matrix> svd(m);
  return svd.singularValues().minCoeff();
}

double commutator_ratio(const Operator& p, const Operator& q) {
  const double scale = static_cast<double>(p.max_abs()) * static_cast<double>(q.max_abs());
  if (scale == 0.0) return 0.0;
  return max_abs_diff(p * q, q * p) / scale;
}

}  // namespace

EdgeSpec EdgeSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "amplitude spec must be an object");
  EdgeSpec s;
  if (!j.contains("mode")) throw Error(ErrorCode::MalformedConfig, "amplitude.mode is required");
  for (const auto& [key, value] : j.items()) {
    if (key == "mode") {
      s.mode = parse_mode(value.get<std::string>());
    } else if (key == "table") {
      if (!value.is_array()) throw Error(ErrorCode::MalformedTable, "amplitude.table must be an array");
      for (const auto& v : value) s.table.push_back(complex_from_json(v));
    } else if (key == "J") {
      s.J = number(value, key);
    } else if (key == "h") {
      s.h_center = s.h_neighbor = number(value, key);
    } else if (key == "h_center") {
      s.h_center = number(value, key);
    } else if (key == "h_neighbor") {
      s.h_neighbor = number(value, key);
    } else if (key == "unitary") {
      if (value.is_string()) {
        if (value.get<std::string>() != "hadamard") {
          throw Error(ErrorCode::MalformedConfig, "amplitude.unitary: unknown name " + value.dump());
        }
      } else {
        s.unitary = matrix_from_json(value);
      }
    } else if (key == "matrix") {
      s.matrix = matrix_from_json(value);
    } else if (key != "overrides") {
      throw Error(ErrorCode::MalformedConfig, "amplitude: unknown key '" + key + "'");
    }
  }
  if (s.mode == EdgeMode::Diagonal && s.table.empty()) {
    throw Error(ErrorCode::MalformedTable, "diagonal mode needs a table");
  }
  if (s.mode == EdgeMode::Custom && s.matrix.size() == 0) {
    throw Error(ErrorCode::MalformedTable, "custom mode needs a matrix");
  }
  return s;
}

nlohmann::json EdgeSpec::to_json() const {
  nlohmann::json j = {{"mode", qmf::to_string(mode)}};
  auto table_json = [&] {
    nlohmann::json t = nlohmann::json::array();
    for (Complex z : table) t.push_back(complex_to_json(z));
    return t;
  };
  switch (mode) {
    case EdgeMode::Diagonal:
      j["table"] = table_json();
      break;
    case EdgeMode::Conjugated:
      j["unitary"] = unitary.size() == 0 ? nlohmann::json("hadamard") : matrix_to_json(unitary);
      if (!table.empty()) {
        j["table"] = table_json();
        break;
      }
      [[fallthrough]];
    case EdgeMode::Ising:
      j["J"] = J;
      j["h_center"] = h_center;
      j["h_neighbor"] = h_neighbor;
      break;
    case EdgeMode::Custom:
      j["matrix"] = matrix_to_json(matrix);
      break;
  }
  return j;
}

AmplitudeSpec AmplitudeSpec::from_json(const nlohmann::json& j) {
  AmplitudeSpec spec;
  spec.default_edge = EdgeSpec::from_json(j);
  if (j.contains("overrides")) {
    const auto& list = j.at("overrides");
    if (!list.is_array()) throw Error(ErrorCode::MalformedConfig, "amplitude.overrides must be an array");
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("center") || !item.contains("neighbor")) {
        throw Error(ErrorCode::MalformedConfig, "amplitude.overrides entries need center and neighbor");
      }
      nlohmann::json edge = item;
      edge.erase("center");
      edge.erase("neighbor");
      spec.overrides[{label_key(item.at("center")), label_key(item.at("neighbor"))}] =
          EdgeSpec::from_json(edge);
    }
  }
  return spec;
}

nlohmann::json AmplitudeSpec::to_json() const {
  nlohmann::json j = default_edge.to_json();
  if (!overrides.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [key, edge] : overrides) {
      nlohmann::json e = edge.to_json();
      e["center"] = key.first;
      e["neighbor"] = key.second;
      list.push_back(std::move(e));
    }
    j["overrides"] = std::move(list);
  }
  return j;
}

double ising_weight(double J, double h_neighbor, double h_center, int index_x, int index_y) {
  const double sx = index_x == 0 ? 1.0 : -1.0;
  const double sy = index_y == 0 ? 1.0 : -1.0;
  return std::exp(J * sx * sy + h_neighbor * sx + h_center * sy);
}

Operator build_edge_amplitude(const EdgeSpec& spec, VertexId center, VertexId neighbor,
                              const SiteModel& sites, double invertibility_floor) {
  const int dx = sites.dim(neighbor);
  const int dy = sites.dim(center);
  const Index n = static_cast<Index>(dx) * dy;
  const std::vector<Site> order{neighbor, center};
  const std::vector<int> dims{dx, dy};

  auto diagonal_from_table = [&]() {
    if (static_cast<Index>(spec.table.size()) != n) {
      throw Error(ErrorCode::MalformedTable, "table has " + std::to_string(spec.table.size()) +
                                                 " entries, edge needs " + std::to_string(n));
    }
    Operator::Matrix d = Operator::Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      const Complex v = spec.table[static_cast<std::size_t>(i)];
      if (!(std::abs(v) >= invertibility_floor)) {
        throw Error(ErrorCode::NonInvertibleSpec,
                    "table entry " + std::to_string(i) + " has modulus " + std::to_string(std::abs(v)));
      }
      d(i, i) = v;
    }
    return d;
  };
  auto diagonal_from_ising = [&]() {
    if (dx != 2 || dy != 2) throw Error(ErrorCode::MalformedTable, "ising mode needs qubit sites");
    Operator::Matrix d = Operator::Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) d(i, i) = ising_weight(spec.J, spec.h_neighbor, spec.h_center, i / 2, i % 2);
    return d;
  };

  switch (spec.mode) {
    case EdgeMode::Diagonal:
      return Operator::from_ordered(order, dims, diagonal_from_table());
    case EdgeMode::Ising:
      return Operator::from_ordered(order, dims, diagonal_from_ising());
    case EdgeMode::Conjugated: {
      const Operator::Matrix u = spec.unitary.size() == 0 ? hadamard() : spec.unitary;
      if (u.rows() != dx || u.rows() != dy || u.cols() != u.rows()) {
        throw Error(ErrorCode::MalformedTable, "unitary size does not match the site dimensions");
      }
      const double unitarity = identity_residual(Operator({0}, {static_cast<int>(u.rows())}, u.adjoint() * u));
      if (unitarity > 1e-10) {
        throw Error(ErrorCode::MalformedTable, "conjugator is not unitary (" + std::to_string(unitarity) + ")");
      }
      const Operator d = Operator::from_ordered(
          order, dims, spec.table.empty() ? diagonal_from_ising() : diagonal_from_table());
      const Operator ux({neighbor}, {dx}, u);
      const Operator uy({center}, {dy}, u);
      const Operator w = ux * uy;
      return w * d * adjoint(w);
    }
    case EdgeMode::Custom:
      if (spec.matrix.rows() != n || spec.matrix.cols() != n) {
        throw Error(ErrorCode::MalformedTable, "custom matrix must be " + std::to_string(n) + "x" +
                                                   std::to_string(n));
      }
      return Operator::from_ordered(order, dims, spec.matrix);
  }
  throw Error(ErrorCode::MalformedTable, "unknown edge mode");
}

AmplitudeFamily::AmplitudeFamily(std::shared_ptr<const Tessellation> t, SiteModel sites,
                                 EdgeFunction edge, std::string mode)
    : tessellation_(std::move(t)), sites_(std::move(sites)), mode_(std::move(mode)) {
  const auto& indep = tessellation_->diagnostics().independence;
  if (!indep.ok) {
    throw Error(ErrorCode::UncertifiedTessellation,
                "centers are not pairwise non-adjacent, witness " + indep.witness.dump());
  }
  for (const auto& [y, plaquette] : tessellation_->plaquette_map()) {
    centers_.push_back(y);
    for (VertexId x : plaquette) {
      if (x == y) continue;
      const std::vector<Site> pair{std::min(x, y), std::max(x, y)};
      edges_.emplace(EdgeKey{y, x}, embed(edge(y, x), pair, sites_));
    }
  }
}

AmplitudeFamily AmplitudeFamily::from_spec(std::shared_ptr<const Tessellation> t, SiteModel sites,
                                           const AmplitudeSpec& spec, double invertibility_floor) {
  const GraphWindow& g = t->graph();
  std::set<std::pair<std::string, std::string>> used;
  auto edge = [&](VertexId y, VertexId x) {
    const std::pair<std::string, std::string> key{g.vertex(y).key(), g.vertex(x).key()};
    auto it = spec.overrides.find(key);
    if (it != spec.overrides.end()) {
      used.insert(key);
      return build_edge_amplitude(it->second, y, x, sites, invertibility_floor);
    }
    return build_edge_amplitude(spec.default_edge, y, x, sites, invertibility_floor);
  };
  AmplitudeFamily f(t, sites, edge, qmf::to_string(spec.default_edge.mode));
  for (const auto& [key, _] : spec.overrides) {
    if (!used.contains(key)) {
      throw Error(ErrorCode::MalformedConfig, "amplitude override (" + key.first + ", " + key.second +
                                                  ") is not an edge of a certified plaquette");
    }
  }
  if (!spec.overrides.empty()) f.mode_ += "+overrides";
  return f;
}

bool AmplitudeFamily::has_plaquette(VertexId y) const {
  return std::binary_search(centers_.begin(), centers_.end(), y);
}

const Operator& AmplitudeFamily::edge(VertexId center, VertexId neighbor) const {
  auto it = edges_.find({center, neighbor});
  if (it == edges_.end()) {
    throw Error(ErrorCode::UncertifiedFamily,
                "no edge amplitude for (" + tessellation_->graph().vertex(center).key() + ", " +
                    tessellation_->graph().vertex(neighbor).key() + ")");
  }
  return it->second;
}

Operator AmplitudeFamily::edge_product(VertexId y) const {
  const Region& plaquette = tessellation_->plaquette(y);
  Operator out = Operator::identity(plaquette.ids(), sites_.dims(plaquette.ids()));
  for (VertexId x : plaquette) {
    if (x != y) out = out * edge(y, x);
  }
  return out;
}

bool AmplitudeFamily::is_diagonal(double tol) const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [&](const auto& kv) { return qmf::is_diagonal(kv.second, tol); });
}

FamilyCertificate verify_family(const AmplitudeFamily& f, const State& state,
                                const Tolerances& tol) {
  const GraphWindow& g = f.tessellation().graph();
  auto edge_json = [&](const AmplitudeFamily::EdgeKey& k) {
    return nlohmann::json{{"center", g.vertex(k.first).to_json()},
                          {"neighbor", g.vertex(k.second).to_json()}};
  };
  std::vector<AmplitudeFamily::EdgeKey> keys;
  std::vector<const Operator*> ops;
  std::vector<Operator> adjoints;
  for (const auto& [k, op] : f.edges()) {
    keys.push_back(k);
    ops.push_back(&op);
    adjoints.push_back(adjoint(op));
  }

  FamilyCertificate cert;

  {
    double worst = 0.0;
    nlohmann::json witness;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const double s = min_singular_value(ops[i]->matrix());
      const double r = s > 0 ? 1.0 / s : std::numeric_limits<double>::infinity();
      if (witness.is_null() || r > worst) {
        worst = r;
        witness = edge_json(keys[i]);
        witness["min_singular_value"] = s;
      }
    }
    cert.invertibility = make_report("family-invertibility", "inverse of the smallest edge singular value is bounded", worst,
                                     1.0 / tol.invertibility_floor, witness);
  }

  {
    std::map<Site, std::vector<std::size_t>> by_site;
    for (std::size_t i = 0; i < ops.size(); ++i)
      for (Site s : ops[i]->support()) by_site[s].push_back(i);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [s, list] : by_site)
      for (std::size_t a = 0; a < list.size(); ++a)
        for (std::size_t b = a; b < list.size(); ++b) pairs.insert({list[a], list[b]});

    double worst = 0.0;
    nlohmann::json witness;
    for (const auto& [i, j] : pairs) {
      const Operator* left[2] = {ops[i], &adjoints[i]};
      const Operator* right[2] = {ops[j], &adjoints[j]};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          if (i == j && a == b) continue;
          const double r = commutator_ratio(*left[a], *right[b]);
          if (r > worst) {
            worst = r;
            witness = {{"first", edge_json(keys[i])},
                       {"first_adjoint", a == 1},
                       {"second", edge_json(keys[j])},
                       {"second_adjoint", b == 1}};
          }
        }
      }
    }
    cert.commutativity = make_report("family-commutativity", "edge amplitudes generate a commutative family",
                                     worst, tol.commutativity, witness);
  }

  {
    double worst = 0.0;
    nlohmann::json witness;
    for (VertexId y : f.centers()) {
      const Operator b = compute_plaquette_normalizer(f, y, state);
      for (std::size_t i = 0; i < ops.size(); ++i) {
        const bool meets = std::any_of(ops[i]->support().begin(), ops[i]->support().end(),
                                       [&](Site s) { return b.acts_on(s); });
        if (!meets) continue;
        const double r = std::max(commutator_ratio(b, *ops[i]), commutator_ratio(b, adjoints[i]));
        if (r > worst) {
          worst = r;
          witness = {{"normalizer_center", g.vertex(y).to_json()}, {"edge", edge_json(keys[i])}};
        }
      }
    }
    cert.commutant = make_report("family-commutant", "plaquette normalizers commute with the family",
                                 worst, tol.commutant, witness);
  }
  return cert;
}

Operator compute_plaquette_normalizer(const AmplitudeFamily& f, VertexId y, const State& state) {
  const Operator p = f.edge_product(y);
  return trace_site(adjoint(p) * p, y, state.density(y));
}

Plaquette build_plaquette_amplitude(const AmplitudeFamily& f, VertexId y, const State& state,
                                    const Tolerances& tol) {
  Plaquette out;
  out.center = y;
  const Operator p = f.edge_product(y);
  out.normalizer = trace_site(adjoint(p) * p, y, state.density(y));
  out.normalizer_min_eigenvalue = min_eigenvalue(out.normalizer.matrix());
  const double floor = tol.normalizer_floor * static_cast<double>(out.normalizer.max_abs());
  out.amplitude = p * inv_sqrt_psd(out.normalizer, floor);
  const Operator density = trace_site(adjoint(out.amplitude) * out.amplitude, y, state.density(y));
  out.normalization_residual = identity_residual(density);
  if (!(out.normalization_residual <= tol.conddensity)) {
    throw Error(ErrorCode::NormalizationResidual,
                "plaquette at " + f.tessellation().graph().vertex(y).key() + ": residual " +
                    std::to_string(out.normalization_residual));
  }
  return out;
}

PlaquetteSet::PlaquetteSet(std::shared_ptr<const AmplitudeFamily> f, State state, Tolerances tol)
    : family_(std::move(f)), state_(std::move(state)), tol_(tol) {
  const auto& centers = family_->centers();
  auto built = run_jobs(centers.size(), [&](std::size_t i) {
    return build_plaquette_amplitude(*family_, centers[i], state_, tol_);
  });
  for (auto& p : built) plaquettes_.emplace(p.center, std::move(p));
}

const Plaquette& PlaquetteSet::at(VertexId y) const {
  auto it = plaquettes_.find(y);
  if (it == plaquettes_.end()) {
    throw Error(ErrorCode::UncertifiedTessellation,
                "no plaquette amplitude at " + tessellation().graph().vertex(y).key());
  }
  return it->second;
}

Operator RegionAmplitude::product() const { return ordered_product(factors); }

RegionAmplitude build_region_amplitude(const PlaquetteSet& p, const Region& region) {
  const Tessellation& t = p.tessellation();
  RegionAmplitude k;
  k.region = region;
  k.support = amplitude_support(t, region);  // certifies the region
  const Region centers = centers_in(t, region);
  k.centers = centers.ids();
  for (VertexId y : centers) k.factors.push_back(p.at(y).amplitude);
  k.v0_confined = region.includes(k.support & t.centers());
  return k;
}

double region_density_residual(const PlaquetteSet& p, const RegionAmplitude& k) {
  const std::vector<Site> traced(k.centers.begin(), k.centers.end());
  const Operator reduced = conjugate_and_trace(k.factors, Operator(), traced, p.state(),
                                               static_cast<Index>(p.tolerances().dimension_cap),
                                               nullptr, p.tolerances().identity_factor);
  return identity_residual(reduced);
}

double factor_order_residual(const RegionAmplitude& k, const SiteModel& sites, Index dimension_cap) {
  const Index dim = detail::product(sites.dims(k.support.ids()));
  if (dim > dimension_cap) {
    throw Error(ErrorCode::DimensionCap, "dense amplitude dimension " + std::to_string(dim) +
                                             " exceeds cap " + std::to_string(dimension_cap));
  }
  std::vector<Operator> reversed(k.factors.rbegin(), k.factors.rend());
  return max_abs_diff(ordered_product(k.factors), ordered_product(reversed));
}

}  // namespace qmf
