#include "qmf/markov_field.hpp"

#include <algorithm>
#include <cmath>

#include "qmf/json_io.hpp"

namespace qmf {

namespace {

nlohmann::json complex_json(Complex z) { return complex_to_json(z); }

void require_subset(const Region& inner, const Region& outer, ErrorCode code,
                    const GraphWindow& g, const std::string& what) {
  const Region extra = inner - outer;
  if (!extra.empty()) {
    throw Error(code, what + " (vertex " + g.vertex(extra.ids().front()).key() + ")");
  }
}

Region support_region(const Operator& a) { return Region(a.support()); }

void require_in_window(const GraphWindow& g, const Operator& a) {
  for (Site s : a.support()) {
    if (s < 0 || static_cast<std::size_t>(s) >= g.size()) {
      throw Error(ErrorCode::VertexOutsideWindow, "operator acts on site " + std::to_string(s));
    }
  }
}

std::vector<Site> all_sites(const RegionAmplitude& k, const Operator& a) {
  Region sites = support_region(a);
  for (const auto& f : k.factors) sites = sites | Region(f.support());
  return sites.ids();
}

Index dense_dimension(const SiteModel& sites, const std::vector<Site>& support) {
  return detail::product(sites.dims(support));
}

void require_dense(const MarkovField& field, const std::vector<Site>& support) {
  const Index dim = dense_dimension(field.state().site_model(), support);
  if (dim > field.dimension_cap()) {
    throw Error(ErrorCode::DimensionCap, "dense dimension " + std::to_string(dim) + " exceeds cap " +
                                             std::to_string(field.dimension_cap()));
  }
}

}  // namespace

MarkovField::MarkovField(std::shared_ptr<const AmplitudeFamily> family, State state,
                         Tolerances tol, FieldOptions options) {
  certificate_ = verify_family(*family, state, tol);
  if (options.require_certified && !certificate_.ok()) {
    for (const auto& r : certificate_.reports()) {
      if (!r.pass) {
        throw Error(ErrorCode::UncertifiedFamily, r.check + " residual " + std::to_string(r.residual) +
                                                      " > " + std::to_string(r.tolerance) +
                                                      ", witness " + r.witness.dump());
      }
    }
  }
  plaquettes_ = std::make_shared<const PlaquetteSet>(std::move(family), std::move(state), tol);
}

RegionAmplitude MarkovField::amplitude(const Region& region) const {
  return build_region_amplitude(*plaquettes_, region);
}

Operator MarkovField::conjugate_and_trace(const RegionAmplitude& k, const Operator& a,
                                          const std::vector<Site>& traced, Index* peak) const {
  require_in_window(graph(), a);
  return qmf::conjugate_and_trace(k.factors, a, traced, state(), dimension_cap(), peak,
                                  tolerances().identity_factor);
}

Complex MarkovField::finite_volume_state(const Region& region, const Operator& a) const {
  const RegionAmplitude k = amplitude(region);
  const Operator reduced = conjugate_and_trace(k, a, all_sites(k, a));
  return reduced.matrix()(0, 0);
}

Complex MarkovField::finite_volume_state_dense(const Region& region, const Operator& a) const {
  require_in_window(graph(), a);
  const RegionAmplitude k = amplitude(region);
  require_dense(*this, all_sites(k, a));
  const Operator kk = k.product();
  return expect_value(adjoint(kk) * a * kk, state());
}

Operator MarkovField::plaquette_map(VertexId y, const Operator& a) const {
  require_in_window(graph(), a);
  const std::vector<Operator> factors{plaquettes_->at(y).amplitude};
  return qmf::conjugate_and_trace(factors, a, std::vector<Site>{y}, state(), dimension_cap(), nullptr,
                                  tolerances().identity_factor);
}

QuasiCondExpDescriptor QuasiCondExpDescriptor::make(const MarkovField& field,
                                                    const Region& lambda1, const Region& lambda2) {
  const Tessellation& t = field.tessellation();
  t.certify(lambda2);
  t.certify(lambda1);
  QuasiCondExpDescriptor d;
  d.lambda1 = lambda1;
  d.lambda2 = lambda2;
  d.closure1 = closure(t.graph(), lambda1);
  require_subset(d.closure1, lambda2, ErrorCode::DescriptorPrecondition, t.graph(),
                 "closure of the inner region is not contained in the outer region");
  d.trace_set = lambda2 - d.closure1;
  d.conjugator = field.amplitude(d.trace_set);
  return d;
}

nlohmann::json QuasiCondExpDescriptor::to_json(const GraphWindow& g) const {
  return {{"lambda1", g.to_json(lambda1)},
          {"lambda2", g.to_json(lambda2)},
          {"trace_set", g.to_json(trace_set)},
          {"conjugator_centers", g.to_json(Region(conjugator.centers))}};
}

QceResult quasi_cond_expectation(const MarkovField& field, const QuasiCondExpDescriptor& d,
                                 const Operator& a) {
  QceResult out;
  out.value = field.conjugate_and_trace(d.conjugator, a, d.trace_set.ids());
  out.output_support = Region(canonicalize(out.value, field.tolerances().identity_factor).support());
  out.contained = d.closure1.includes(out.output_support);
  return out;
}

Operator::Matrix choi_matrix(const MarkovField& field, const QuasiCondExpDescriptor& d,
                             Region* output_sites) {
  const SiteModel& sites = field.state().site_model();
  const std::vector<Site> in_sites = d.lambda2.ids();
  const std::vector<int> in_dims = sites.dims(in_sites);
  Region out_region = d.lambda2;
  for (const auto& f : d.conjugator.factors) out_region = out_region | Region(f.support());
  out_region = out_region - d.trace_set;
  const std::vector<Site> out_sites = out_region.ids();
  const std::vector<int> out_dims = sites.dims(out_sites);
  const Index din = detail::product(in_dims);
  const Index dout = detail::product(out_dims);
  if (din * dout > field.dimension_cap()) {
    throw Error(ErrorCode::DimensionCap, "Choi matrix dimension " + std::to_string(din * dout) +
                                             " exceeds cap " + std::to_string(field.dimension_cap()));
  }
  Operator::Matrix choi = Operator::Matrix::Zero(din * dout, din * dout);
  for (Index i = 0; i < din; ++i) {
    for (Index j = 0; j < din; ++j) {
      Operator::Matrix unit = Operator::Matrix::Zero(din, din);
      unit(i, j) = 1.0;
      const Operator image = field.conjugate_and_trace(d.conjugator, Operator(in_sites, in_dims, unit),
                                                       d.trace_set.ids());
      choi.block(i * dout, j * dout, dout, dout) = embed(image, out_sites, out_dims).matrix();
    }
  }
  if (output_sites) *output_sites = out_region;
  return choi;
}

std::vector<VerificationReport> verify_quasi_cond_expectation(const MarkovField& field,
                                                              const QuasiCondExpDescriptor& d,
                                                              Rng& rng) {
  const Tolerances& tol = field.tolerances();
  const GraphWindow& g = field.graph();
  const SiteModel& sites = field.state().site_model();
  nlohmann::json base = d.to_json(g);
  base["seed"] = rng.seed();
  std::vector<VerificationReport> out;

  out.push_back(timed([&] {
    const Operator id = Operator::identity(d.lambda2.ids(), sites.dims(d.lambda2.ids()));
    const Operator image = quasi_cond_expectation(field, d, id).value;
    return make_report("qce-unitality", "quasi-conditional expectation is unital",
                       identity_residual(image), tol.unitality, base);
  }));

  out.push_back(timed([&] {
    const Operator::Matrix choi = choi_matrix(field, d);
    const double lo = min_eigenvalue(choi);
    nlohmann::json w = base;
    w["choi_min_eigenvalue"] = lo;
    w["choi_hermiticity"] = hermiticity_residual(choi);
    w["choi_dimension"] = choi.rows();
    return make_report("qce-complete-positivity", "Choi matrix is positive semidefinite",
                       std::max(0.0, -lo), tol.choi, w);
  }));

  out.push_back(timed([&] {
    const std::vector<Site> s1 = d.lambda1.ids();
    const std::vector<int> d1 = sites.dims(s1);
    const Index n1 = detail::product(d1);
    const Operator a = random_operator(rng, d.lambda2.ids(), sites.dims(d.lambda2.ids()));
    const Operator ea = quasi_cond_expectation(field, d, a).value;
    double worst = 0.0;
    nlohmann::json w = base;
    for (Index i = 0; i < n1; ++i) {
      for (Index j = 0; j < n1; ++j) {
        Operator::Matrix m = Operator::Matrix::Zero(n1, n1);
        m(i, j) = 1.0;
        const Operator c(s1, d1, m);
        const double left = max_abs_diff(quasi_cond_expectation(field, d, c * a).value, c * ea);
        const double right = max_abs_diff(quasi_cond_expectation(field, d, a * c).value, ea * c);
        if (std::max(left, right) > worst) {
          worst = std::max(left, right);
          w["unit"] = {i, j};
        }
      }
    }
    w["basis_size"] = n1 * n1;
    return make_report("qce-module-property", "inner-region elements factor out", worst, tol.module, w);
  }));
  return out;
}

VerificationReport plaquette_density_check(const MarkovField& field) {
  return timed([&] {
    double worst = 0.0;
    nlohmann::json w = {{"plaquettes", field.plaquettes().all().size()}};
    for (const auto& [y, p] : field.plaquettes().all()) {
      if (p.normalization_residual >= worst) {
        worst = p.normalization_residual;
        w["worst_center"] = field.graph().vertex(y).to_json();
        w["normalizer_min_eigenvalue"] = p.normalizer_min_eigenvalue;
      }
    }
    return make_report("plaquette-density", "plaquette amplitude is a conditional density", worst,
                       field.tolerances().conddensity, w);
  });
}

VerificationReport region_density_check(const MarkovField& field, const Region& region) {
  return timed([&] {
    const RegionAmplitude k = field.amplitude(region);
    const double r = region_density_residual(field.plaquettes(), k);
    nlohmann::json w = {{"region", field.graph().to_json(region)},
                        {"centers", k.centers.size()},
                        {"v0_confined", k.v0_confined}};
    return make_report("region-density", "region amplitude is a conditional density", r,
                       field.tolerances().region, w);
  });
}

VerificationReport factorization_check(const MarkovField& field, const Region& lambda,
                                       const Region& lambda_prime) {
  const GraphWindow& g = field.graph();
  field.tessellation().certify(lambda);
  const Region overlap = closure(g, lambda) & lambda_prime;
  if (!overlap.empty()) {
    throw Error(ErrorCode::DescriptorPrecondition,
                "closure of the first region meets the second at " + g.vertex(overlap.ids().front()).key());
  }
  return timed([&] {
    const RegionAmplitude joint = field.amplitude(lambda | lambda_prime);
    const RegionAmplitude first = field.amplitude(lambda);
    const RegionAmplitude second = field.amplitude(lambda_prime);
    require_dense(field, all_sites(joint, Operator()));
    const double r = max_abs_diff(joint.product(), first.product() * second.product());
    nlohmann::json w = {{"lambda", g.to_json(lambda)}, {"lambda_prime", g.to_json(lambda_prime)}};
    return make_report("amplitude-factorization", "amplitude of separated regions factorizes", r,
                       field.tolerances().factorization, w);
  });
}

VerificationReport localization_check(const MarkovField& field, const Region& lambda0,
                                      const Region& lambda, const Operator& a) {
  const GraphWindow& g = field.graph();
  const Tessellation& t = field.tessellation();
  t.certify(lambda);
  t.certify(lambda0);
  require_subset(support_region(a), lambda0, ErrorCode::SupportNotContained, g,
                 "observable is not localized in the inner region");
  const Region closure0 = closure(g, lambda0);
  require_subset(closure0, lambda, ErrorCode::DescriptorPrecondition, g,
                 "closure of the inner region is not contained in the outer region");
  return timed([&] {
    const RegionAmplitude k = field.amplitude(lambda);
    require_dense(field, all_sites(k, a));
    const Operator kk = k.product();
    const Operator conjugated = adjoint(kk) * a * kk;
    const Region outer_centers = (lambda - closure0) & t.centers();

    double worst = 0.0;
    nlohmann::json per_center = nlohmann::json::array();
    for (VertexId z : outer_centers) {
      const Operator lhs = trace_site(conjugated, z, field.state().density(z));
      const RegionAmplitude without = field.amplitude(lambda - Region{z});
      const Operator rhs = field.conjugate_and_trace(without, a, {});
      const double r = max_abs_diff(lhs, rhs);
      worst = std::max(worst, r);
      per_center.push_back({{"center", g.vertex(z).to_json()}, {"residual", r}});
    }
    const Operator lhs_all = umegaki_expect(conjugated, outer_centers.ids(), field.state());
    const Operator rhs_all = field.conjugate_and_trace(field.amplitude(closure0), a, {});
    const double r_all = max_abs_diff(lhs_all, rhs_all);
    worst = std::max(worst, r_all);
    nlohmann::json w = {{"lambda0", g.to_json(lambda0)},
                        {"lambda", g.to_json(lambda)},
                        {"single_center", per_center},
                        {"all_centers", r_all}};
    return make_report("localization", "tracing outer centers removes their plaquette amplitudes",
                       worst, field.tolerances().localization, w);
  });
}

VerificationReport stationarity_probe(const MarkovField& field, const Region& lambda0,
                                      const std::vector<Region>& growth, const Operator& a) {
  const GraphWindow& g = field.graph();
  field.tessellation().certify(lambda0);
  require_subset(support_region(a), lambda0, ErrorCode::SupportNotContained, g,
                 "observable is not localized in the inner region");
  const Region closure0 = closure(g, lambda0);
  for (std::size_t i = 0; i < growth.size(); ++i) {
    require_subset(closure0, growth[i], ErrorCode::DescriptorPrecondition, g,
                   "growth region " + std::to_string(i) + " does not contain the closure");
    if (i > 0) {
      require_subset(growth[i - 1], growth[i], ErrorCode::DescriptorPrecondition, g,
                     "growth regions are not increasing at " + std::to_string(i));
    }
  }
  return timed([&] {
    const Complex base = field.finite_volume_state(closure0, a);
    double worst = 0.0;
    nlohmann::json values = nlohmann::json::array();
    for (const auto& region : growth) {
      const Complex v = field.finite_volume_state(region, a);
      worst = std::max(worst, std::abs(v - base));
      values.push_back(complex_json(v));
    }
    nlohmann::json w = {{"lambda0", g.to_json(lambda0)}, {"base", complex_json(base)}, {"values", values}};
    return make_report("stationarity", "finite-volume states agree beyond the closure", worst,
                       field.tolerances().stationarity, w);
  });
}

VerificationReport projectivity_check(const MarkovField& field, const std::vector<Region>& sequence,
                                      const Operator& a) {
  const GraphWindow& g = field.graph();
  const Tessellation& t = field.tessellation();
  if (sequence.size() < 2) throw Error(ErrorCode::SequenceCondition, "need at least two regions");
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    t.certify(sequence[n]);
    const Region hit = external_boundary(g, sequence[n]) & t.centers();
    if (!hit.empty()) {
      throw Error(ErrorCode::SequenceCondition, "external boundary of region " + std::to_string(n) +
                                                    " contains center " + g.vertex(hit.ids().front()).key());
    }
    if (n + 1 < sequence.size()) {
      const Region missing = closure(g, sequence[n]) - sequence[n + 1];
      if (!missing.empty()) {
        throw Error(ErrorCode::SequenceCondition,
                    "closure of region " + std::to_string(n) + " is not inside region " +
                        std::to_string(n + 1) + " (vertex " + g.vertex(missing.ids().front()).key() + ")");
      }
    }
  }
  return timed([&] {
    std::vector<QuasiCondExpDescriptor> steps;
    for (std::size_t n = 0; n + 1 < sequence.size(); ++n)
      steps.push_back(QuasiCondExpDescriptor::make(field, sequence[n], sequence[n + 1]));

    double worst = 0.0;
    nlohmann::json per_step = nlohmann::json::array();
    for (std::size_t n = 0; n < steps.size(); ++n) {
      const Operator conditioned = quasi_cond_expectation(field, steps[n], a).value;
      const double r = std::abs(field.finite_volume_state(sequence[n], conditioned) -
                                field.finite_volume_state(sequence[n + 1], a));
      worst = std::max(worst, r);
      per_step.push_back(r);
    }
    Operator b = a;
    for (std::size_t n = steps.size(); n-- > 0;) {
      b = canonicalize(quasi_cond_expectation(field, steps[n], b).value,
                       field.tolerances().identity_factor);
    }
    const double telescoped =
        std::abs(field.finite_volume_state(sequence.front(), b) -
                 field.finite_volume_state(sequence.back(), a));
    worst = std::max(worst, telescoped);
    nlohmann::json w = {{"steps", per_step}, {"telescoped", telescoped}, {"length", sequence.size()}};
    return make_report("projectivity", "conditioned chain reproduces the larger finite-volume state",
                       worst, field.tolerances().projectivity, w);
  });
}

Complex classical_oracle(const Tessellation& t, const SiteModel& sites, const State& state,
                         const Region& region, const Operator& g, const EdgeScalar& edge) {
  const Region centers = region & t.centers();
  Region all = Region(g.support());
  for (VertexId y : centers) all = all | t.plaquette(y);
  const std::vector<VertexId>& s_list = all.ids();

  std::map<VertexId, std::size_t> slot;
  std::vector<int> radix;
  double total = 1;
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    slot[s_list[i]] = i;
    radix.push_back(sites.dim(s_list[i]));
    total *= radix.back();
  }
  if (total > double(1 << 20)) {
    throw Error(ErrorCode::DimensionCap, "oracle would enumerate " + std::to_string(total) + " configurations");
  }
  std::vector<std::vector<double>> p(s_list.size());
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    const auto rho = state.density(s_list[i]);
    for (int s = 0; s < radix[i]; ++s) p[i].push_back(rho(s, s).real());
  }

  const auto& g_sites = g.support();
  std::vector<long> g_stride(g_sites.size(), 1);
  for (std::size_t i = g_sites.size(); i-- > 1;) g_stride[i - 1] = g_stride[i] * g.dims()[i];

  std::vector<int> s(s_list.size(), 0);
  Complex value = 0;
  for (long config = 0; config < static_cast<long>(total); ++config) {
    double weight = 1;
    for (std::size_t i = 0; i < s.size(); ++i) weight *= p[i][s[i]];

    Complex amp = 1;
    for (VertexId y : centers) {
      const int sy = s[slot[y]];
      const auto& ny = t.graph().neighbors(y);
      Complex prod = 1;
      for (VertexId x : ny) prod *= edge(y, x, s[slot[x]], sy);
      double b = 0;
      for (int u = 0; u < radix[slot[y]]; ++u) {
        double term = p[slot[y]][u];
        for (VertexId x : ny) term *= std::norm(edge(y, x, s[slot[x]], u));
        b += term;
      }
      amp *= prod / std::sqrt(b);
    }

    long gi = 0;
    for (std::size_t i = 0; i < g_sites.size(); ++i) gi += s[slot[g_sites[i]]] * g_stride[i];
    value += weight * std::norm(amp) * g.matrix()(gi, gi);

    for (std::size_t i = s.size(); i-- > 0;) {
      if (++s[i] < radix[i]) break;
      s[i] = 0;
    }
  }
  return value;
}

EdgeScalar diagonal_edge_scalar(const AmplitudeFamily& f) {
  auto edges = f.edges();
  return [edges = std::move(edges)](VertexId y, VertexId x, int sx, int sy) -> Complex {
    const Operator& k = edges.at({y, x});
    const int dx = k.dims()[x < y ? 0 : 1];
    const int dy = k.dims()[x < y ? 1 : 0];
    const Index i = x < y ? sx * dy + sy : sy * dx + sx;
    return k.matrix()(i, i);
  };
}

VerificationReport classical_oracle_compare(const MarkovField& field, const Region& region,
                                            const Operator& g, const std::optional<EdgeScalar>& edge) {
  if (!field.family().is_diagonal()) {
    throw Error(ErrorCode::NonDiagonalInput, "amplitude family is not diagonal");
  }
  if (!is_diagonal(g)) throw Error(ErrorCode::NonDiagonalInput, "observable is not diagonal");
  for (const auto& [site, rho] : field.state().explicit_densities()) {
    if (!is_diagonal(Operator({site}, {static_cast<int>(rho.rows())}, rho))) {
      throw Error(ErrorCode::NonDiagonalInput,
                  "density at " + field.graph().vertex(site).key() + " is not diagonal");
    }
  }
  return timed([&] {
    const Complex oracle =
        classical_oracle(field.tessellation(), field.state().site_model(), field.state(), region, g,
                         edge ? *edge : diagonal_edge_scalar(field.family()));
    const Complex value = field.finite_volume_state(region, g);
    nlohmann::json w = {{"region", field.graph().to_json(region)},
                        {"oracle", complex_json(oracle)},
                        {"field", complex_json(value)}};
    return make_report("classical-oracle", "agrees with a direct configuration sum",
                       std::abs(oracle - value), field.tolerances().oracle, w);
  });
}

}  // namespace qmf
