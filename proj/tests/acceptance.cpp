// Acceptance run: one PASS/FAIL line per criterion. Library results are
// compared with values recomputed here by separate dense code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "qmf/cli/config.hpp"
#include "qmf/cli/runner.hpp"
#include "qmf/suite.hpp"

using namespace qmf;
using namespace fixtures;
using Mat = Operator::Matrix;

namespace {

// Bookkeeping -----------------------------------------------------------------

struct Measure {
  double worst = 0.0;
  double limit = 0.0;
  bool at_least = false;  // pass when every value >= limit
  bool failed = false;
  int count = 0;
};

class Criterion {
 public:
  void at_most(const std::string& label, double value, double limit) { record(label, value, limit, false); }
  void at_least(const std::string& label, double value, double limit) { record(label, value, limit, true); }
  void require(const std::string& label, bool ok) { at_most(label, ok ? 0.0 : 1.0, 0.0); }

  bool pass() const {
    if (measures_.empty()) return false;
    for (const auto& [label, m] : measures_)
      if (m.failed) return false;
    return true;
  }

  void print() const {
    for (const auto& label : order_) {
      const Measure& m = measures_.at(label);
      std::printf("    %-58s %s %.3e (limit %.1e, n=%d)%s\n", label.c_str(), m.at_least ? "min" : "max", m.worst,
                  m.limit, m.count, m.failed ? "  <-- violated" : "");
    }
  }

 private:
  void record(const std::string& label, double value, double limit, bool at_least) {
    auto [it, fresh] = measures_.try_emplace(label);
    Measure& m = it->second;
    if (fresh) {
      order_.push_back(label);
      m.worst = value;
      m.limit = limit;
      m.at_least = at_least;
    }
    const bool ok = at_least ? value >= limit : value <= limit;  // NaN fails both
    if (!ok) m.failed = true;
    if (std::isnan(value) || (at_least ? value < m.worst : value > m.worst)) m.worst = value;
    ++m.count;
  }

  std::map<std::string, Measure> measures_;
  std::vector<std::string> order_;
};

// Dense qubit algebra, written independently of the library operators --------

struct Dense {
  std::vector<Site> sites;  // ascending; smallest site is the most significant bit
  Mat m;
};

Index bit_weight(std::size_t k, std::size_t n) { return Index(1) << (n - 1 - k); }

std::size_t index_of(const std::vector<Site>& sites, Site s) {
  const auto it = std::find(sites.begin(), sites.end(), s);
  if (it == sites.end()) throw std::runtime_error("site missing from target");
  return static_cast<std::size_t>(it - sites.begin());
}

std::vector<Site> merged(const std::vector<Site>& a, const std::vector<Site>& b) {
  std::set<Site> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

/// a ⊗ 1 on `target`, which must contain the sites of `a`.
Dense lift(const std::vector<Site>& sites, const Mat& a, const std::vector<Site>& target) {
  const std::size_t n = target.size();
  const Index dim = Index(1) << n;
  if (a.rows() != (Index(1) << sites.size())) throw std::runtime_error("qubit operators only");
  std::vector<std::size_t> pos;
  for (Site s : sites) pos.push_back(index_of(target, s));
  std::vector<Index> sub(static_cast<std::size_t>(dim)), rest(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) {
    Index s = 0, r = i;
    for (std::size_t p : pos) {
      s = (s << 1) | ((i & bit_weight(p, n)) ? 1 : 0);
      r &= ~bit_weight(p, n);
    }
    sub[i] = s;
    rest[i] = r;
  }
  Mat out = Mat::Zero(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i)
      if (rest[i] == rest[j]) out(i, j) = a(sub[i], sub[j]);
  return {target, out};
}

Dense lift(const Operator& a, const std::vector<Site>& target) { return lift(a.support(), a.matrix(), target); }
Dense lift(const Dense& a, const std::vector<Site>& target) { return lift(a.sites, a.m, target); }

/// Tr_s((ρ ⊗ 1) x).
Dense trace_site(const Dense& x, Site s, const Mat& rho) {
  const std::size_t n = x.sites.size();
  const std::size_t k = index_of(x.sites, s);
  std::vector<Site> rest_sites = x.sites;
  rest_sites.erase(rest_sites.begin() + static_cast<long>(k));
  const Index dim = Index(1) << (n - 1);
  const std::size_t low_bits = n - 1 - k;
  auto insert = [&](Index i, Index b) {
    const Index low = i & ((Index(1) << low_bits) - 1);
    return ((i >> low_bits) << (low_bits + 1)) | (b << low_bits) | low;
  };
  Mat out = Mat::Zero(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) {
      Complex acc = 0;
      for (Index p = 0; p < 2; ++p)
        for (Index q = 0; q < 2; ++q) acc += rho(q, p) * x.m(insert(i, p), insert(j, q));
      out(i, j) = acc;
    }
  return {rest_sites, out};
}

Dense trace_sites(Dense x, const std::vector<Site>& sites, const State& st) {
  for (Site s : sites) x = trace_site(x, s, st.density(s));
  return x;
}

Complex expectation(const Dense& x, const State& st) {
  const Dense r = trace_sites(x, x.sites, st);
  return r.m(0, 0);
}

double identity_residual(const Dense& x) {
  return (x.m - Mat::Identity(x.m.rows(), x.m.cols())).cwiseAbs().maxCoeff();
}

double max_diff(const Dense& a, const Dense& b) {
  const auto all = merged(a.sites, b.sites);
  return (lift(a, all).m - lift(b, all).m).cwiseAbs().maxCoeff();
}

Dense operator*(const Dense& a, const Dense& b) {
  const auto all = merged(a.sites, b.sites);
  return {all, lift(a, all).m * lift(b, all).m};
}

Dense adjoint(const Dense& a) { return {a.sites, a.m.adjoint()}; }

Dense dense(const Operator& a) { return {a.support(), a.matrix()}; }

std::vector<Site> amplitude_sites(const MarkovField& f, const Region& region) {
  std::vector<Site> support;
  for (VertexId v : region)
    if (f.tessellation().is_center(v)) support = merged(support, f.plaquettes().at(v).amplitude.support());
  return support;
}

/// Product of the plaquette amplitudes of the centers in `region`, ascending.
Dense region_amplitude(const MarkovField& f, const Region& region) {
  std::vector<Site> support;
  std::vector<VertexId> centers;
  for (VertexId v : region)
    if (f.tessellation().is_center(v)) {
      centers.push_back(v);
      support = merged(support, f.plaquettes().at(v).amplitude.support());
    }
  Dense k{support, Mat::Identity(Index(1) << support.size(), Index(1) << support.size())};
  for (VertexId y : centers) k.m = k.m * lift(f.plaquettes().at(y).amplitude, support).m;
  return k;
}

/// φ̃_Λ(a) from the dense product.
Complex state_value(const MarkovField& f, const Region& region, const Operator& a) {
  const Dense k = region_amplitude(f, region);
  const Dense conj = adjoint(k) * dense(a) * k;
  return expectation(conj, f.state());
}

std::size_t dense_support(const MarkovField& f, const Region& region, const std::vector<Site>& extra = {}) {
  return merged(amplitude_sites(f, region), extra).size();
}

// Sampling helpers ---------------------------------------------------------------

std::vector<Site> ids(const Region& r) { return r.ids(); }

std::optional<Region> grow(const GraphWindow& g, const Region& r, const Region& pool, Rng& rng, int max_add) {
  for (VertexId v : r)
    if (!g.complete(v)) return std::nullopt;
  std::vector<VertexId> front = (external_boundary(g, r) & pool).ids();
  if (front.empty()) return std::nullopt;
  Region out = r;
  const int add = rng.uniform_int(1, max_add);
  for (int k = 0; k < add && !front.empty(); ++k) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, int(front.size()) - 1));
    out = out | Region{front[i]};
    front.erase(front.begin() + static_cast<long>(i));
  }
  return out;
}

Operator random_observable(Rng& rng, const Region& within, int max_sites) {
  std::vector<Site> sites = within.ids();
  while (static_cast<int>(sites.size()) > max_sites)
    sites.erase(sites.begin() + rng.uniform_int(0, int(sites.size()) - 1));
  return random_operator(rng, sites, std::vector<int>(sites.size(), 2));
}

State random_state(const GraphWindow& g, Rng& rng, bool diagonal) {
  State st(SiteModel(2));
  for (VertexId v : g.all()) st.set_density(v, diagonal ? random_diagonal_density(rng, 2) : random_density(rng, 2));
  return st;
}

template <typename Attempt>
void draw(const std::string& what, int count, Rng& rng, Attempt attempt, int attempts = 2000) {
  int done = 0;
  for (int k = 0; k < attempts && done < count; ++k)
    if (attempt(rng)) ++done;
  if (done < count) throw std::runtime_error(what + ": only " + std::to_string(done) + " instances found");
}

struct Graphs {
  std::shared_ptr<const Tessellation> line = tessellate(line_window(12));
  std::shared_ptr<const Tessellation> z2 = tessellate(z2_window(5));
  std::shared_ptr<const Tessellation> tree = tessellate(tree_window(3, 4));
};

const Graphs& graphs() {
  static const Graphs g;
  return g;
}

std::shared_ptr<const MarkovField> conjugated_field(std::shared_ptr<const Tessellation> t, Rng& rng) {
  auto family = random_conjugated_family(t, rng);
  return std::make_shared<const MarkovField>(family, random_state(t->graph(), rng, false));
}

// 1. Tessellation laws -------------------------------------------------------------

struct Levels {
  std::vector<std::set<VertexId>> centers, plaquettes;
  std::set<VertexId> v0;
};

Levels induction(const GraphWindow& g, VertexId root, int max_level) {
  Levels out;
  std::set<VertexId> c{root}, next;
  auto complete = [&](const std::set<VertexId>& s) {
    return std::all_of(s.begin(), s.end(), [&](VertexId v) { return g.complete(v); });
  };
  for (int n = 1; n <= max_level; ++n) {
    if (!complete(c)) break;
    std::set<VertexId> p = c;
    for (VertexId y : c)
      for (VertexId x : g.neighbors(y)) p.insert(x);
    if (!complete(p)) break;
    out.centers.push_back(c);
    out.plaquettes.push_back(p);
    std::set<VertexId> front;
    for (VertexId v : p)
      for (VertexId x : g.neighbors(v))
        if (!p.contains(x)) front.insert(x);
    next = c;
    next.insert(front.begin(), front.end());
    if (front.empty()) break;
    c = next;
  }
  out.v0 = next;
  return out;
}

void tessellation_laws(Criterion& cr, const std::string& name, const Tessellation& t, std::size_t expected_levels) {
  const GraphWindow& g = t.graph();
  const Levels ref = induction(g, t.root(), 16);
  cr.require(name + ": level count", ref.centers.size() == expected_levels && t.levels().size() == expected_levels);
  bool same = ref.centers.size() == t.levels().size();
  for (std::size_t n = 0; same && n < ref.centers.size(); ++n) {
    const auto& lc = t.levels()[n].centers.ids();
    const auto& lp = t.levels()[n].plaquettes.ids();
    same = std::set<VertexId>(lc.begin(), lc.end()) == ref.centers[n] &&
           std::set<VertexId>(lp.begin(), lp.end()) == ref.plaquettes[n];
  }
  const auto& c = t.centers().ids();
  same = same && std::set<VertexId>(c.begin(), c.end()) == ref.v0;
  cr.require(name + ": levels and centers match a separate induction", same);

  std::size_t inner = 0, adjacent = 0, uncovered = 0, growth = 0;
  for (const auto& p : ref.plaquettes)
    for (VertexId v : p) {
      const bool on_boundary = std::any_of(g.neighbors(v).begin(), g.neighbors(v).end(),
                                           [&](VertexId x) { return !p.contains(x); });
      if (on_boundary && ref.v0.contains(v)) ++inner;
    }
  for (VertexId a : ref.v0)
    for (VertexId b : g.neighbors(a))
      if (ref.v0.contains(b)) ++adjacent;
  std::set<VertexId> domain = ref.plaquettes.back();
  for (VertexId v : ref.plaquettes.back())
    for (VertexId x : g.neighbors(v)) domain.insert(x);
  for (VertexId v : domain) {
    bool covered = ref.v0.contains(v);
    for (VertexId x : g.neighbors(v)) covered = covered || ref.v0.contains(x);
    if (!covered) ++uncovered;
  }
  for (std::size_t n = 0; n + 1 < ref.plaquettes.size(); ++n) {
    if (ref.plaquettes[n + 1].size() < ref.plaquettes[n].size() + 2) ++growth;
    if (ref.centers[n + 1].size() < ref.centers[n].size() + 1) ++growth;
  }
  cr.require(name + ": level boundaries avoid the centers", inner == 0);
  cr.require(name + ": centers pairwise non-adjacent", adjacent == 0);
  cr.require(name + ": plaquettes cover closure of the last level", uncovered == 0);
  cr.require(name + ": growth bounds", growth == 0);
  cr.require(name + ": library diagnostics agree", t.diagnostics().all_ok());
}

Criterion criterion_tessellation() {
  Criterion cr;
  tessellation_laws(cr, "line r12", *graphs().line, 6);
  tessellation_laws(cr, "Z2 r5", *graphs().z2, 2);
  tessellation_laws(cr, "tree d3 depth4", *graphs().tree, 2);

  const auto pentagon = tessellate(pentagon_window());
  const auto& d = pentagon->diagnostics().independence;
  cr.require("pentagon with chord: independence fails", !d.ok);
  cr.require("pentagon with chord: witness is (c, d)", d.witness == nlohmann::json::array({"c", "d"}));
  const Levels ref = induction(pentagon->graph(), pentagon->root(), 16);
  const auto& g = pentagon->graph();
  cr.require("pentagon with chord: separate induction puts c and d in the centers",
             ref.v0.contains(g.id(Vertex(std::string("c")))) && ref.v0.contains(g.id(Vertex(std::string("d")))));
  return cr;
}

// 2. Plaquette conditional density ---------------------------------------------------

void plaquette_oracle(Criterion& cr, const std::string& kind, const AmplitudeFamily& fam, const State& st) {
  const PlaquetteSet ps(std::make_shared<const AmplitudeFamily>(fam), st);
  const GraphWindow& g = fam.tessellation().graph();
  for (const auto& [y, plaq] : ps.all()) {
    std::vector<Site> sites = g.neighbors(y);
    sites.push_back(y);
    std::sort(sites.begin(), sites.end());
    const std::vector<Site> outer = g.neighbors(y);

    Mat p = Mat::Identity(Index(1) << sites.size(), Index(1) << sites.size());
    for (VertexId x : g.neighbors(y)) p = p * lift(fam.edge(y, x), sites).m;
    const Dense b = trace_site({sites, p.adjoint() * p}, y, st.density(y));
    Eigen::SelfAdjointEigenSolver<Mat> es((b.m + b.m.adjoint()) / Complex(2.0));
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Mat b_inv_sqrt = es.eigenvectors() * inv_sqrt.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    const Mat k = p * lift(b.sites, b_inv_sqrt, sites).m;
    const Mat k_lib = lift(plaq.amplitude, sites).m;

    cr.at_most(kind + ": library amplitude, |E0_y(K*K) - 1|", identity_residual(trace_site({sites, k_lib.adjoint() * k_lib}, y, st.density(y))), 1e-9);
    cr.at_most(kind + ": rebuilt amplitude, |E0_y(K*K) - 1|", identity_residual(trace_site({sites, k.adjoint() * k}, y, st.density(y))), 1e-9);
    cr.at_most(kind + ": library and rebuilt amplitudes agree", (k - k_lib).cwiseAbs().maxCoeff(), 1e-9);
  }
}

Criterion criterion_conddensity() {
  Criterion cr;
  Rng rng(2001);
  for (int i = 0; i < 50; ++i) {
    const auto t = i % 2 == 0 ? graphs().line : graphs().tree;
    const auto fam = random_diagonal_family(t, rng);
    plaquette_oracle(cr, "diagonal families", *fam, random_state(t->graph(), rng, false));
  }
  for (int i = 0; i < 10; ++i) {
    const auto t = i % 2 == 0 ? graphs().line : graphs().tree;
    const auto fam = random_conjugated_family(t, rng);
    plaquette_oracle(cr, "conjugated families", *fam, random_state(t->graph(), rng, false));
  }
  return cr;
}

// 3. Region density and factorization ------------------------------------------------

constexpr std::size_t kDenseSites = 9;

Criterion criterion_region() {
  Criterion cr;
  const std::vector<std::pair<std::string, std::shared_ptr<const Tessellation>>> all = {
      {"line", graphs().line}, {"Z2", graphs().z2}, {"tree", graphs().tree}};
  Rng rng(3001);
  for (const auto& [name, t] : all) {
    const auto field = conjugated_field(t, rng);
    const GraphWindow& g = t->graph();
    const Region pool = certifiable_vertices(*t);

    draw(name + " region density", 20, rng, [&](Rng& r) {
      const Region lam = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 4)), r);
      if (centers_in(*t, lam).empty() || !is_certifiable(*t, lam)) return false;
      if (dense_support(*field, lam) > kDenseSites) return false;
      cr.at_most(name + ": region density (library)", region_density_check(*field, lam).residual, 1e-9);
      const Dense k = region_amplitude(*field, lam);
      const Dense e = trace_sites(adjoint(k) * k, ids(centers_in(*t, lam)), field->state());
      cr.at_most(name + ": region density (dense)", identity_residual(e), 1e-9);
      cr.at_most(name + ": library amplitude equals dense product",
                 max_diff(dense(field->amplitude(lam).product()), k), 1e-9);
      return true;
    });

    draw(name + " factorization", 20, rng, [&](Rng& r) {
      const Region a = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 3)), r);
      const Region b = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 3)), r);
      if (centers_in(*t, a).empty() || centers_in(*t, b).empty()) return false;
      if (!is_certifiable(*t, a) || !is_certifiable(*t, b)) return false;
      if (closure(g, a).intersects(b)) return false;
      if (dense_support(*field, a | b) > kDenseSites) return false;
      cr.at_most(name + ": factorization (library)", factorization_check(*field, a, b).residual, 1e-10);
      const Dense joint = region_amplitude(*field, a | b);
      cr.at_most(name + ": factorization (dense)",
                 max_diff(joint, region_amplitude(*field, a) * region_amplitude(*field, b)), 1e-10);
      return true;
    });
  }
  return cr;
}

// 4. Localization -------------------------------------------------------------------

Criterion criterion_localization() {
  Criterion cr;
  Rng rng(4001);
  for (const auto& [name, t] : std::vector<std::pair<std::string, std::shared_ptr<const Tessellation>>>{
           {"line", graphs().line}, {"tree", graphs().tree}}) {
    const auto field = conjugated_field(t, rng);
    const GraphWindow& g = t->graph();
    const Region pool = certifiable_vertices(*t);
    draw(name + " localization", 20, rng, [&](Rng& r) {
      const Region lam0 = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 2)), r);
      const Region c0 = closure(g, lam0);
      auto lam = grow(g, c0, pool, r, 3);
      if (!lam) return false;
      if (r.uniform() < 0.5) lam = grow(g, *lam, pool, r, 2);
      if (!lam || !is_certifiable(*t, *lam)) return false;
      const Region outer = centers_in(*t, *lam - c0);
      if (outer.empty()) return false;
      const Operator a = random_observable(r, lam0, 2);
      if (dense_support(*field, *lam, a.support()) > kDenseSites) return false;

      cr.at_most(name + ": localization (library)", localization_check(*field, lam0, *lam, a).residual, 1e-9);
      const Dense k = region_amplitude(*field, *lam);
      const Dense conj = adjoint(k) * dense(a) * k;
      for (VertexId z : outer) {
        const Dense lhs = trace_site(conj, z, field->state().density(z));
        const Dense kz = region_amplitude(*field, *lam - Region{z});
        cr.at_most(name + ": one outer center traced (dense)", max_diff(lhs, adjoint(kz) * dense(a) * kz), 1e-9);
      }
      const Dense lhs = trace_sites(conj, ids(outer), field->state());
      const Dense kc = region_amplitude(*field, c0);
      cr.at_most(name + ": all outer centers traced (dense)", max_diff(lhs, adjoint(kc) * dense(a) * kc), 1e-9);
      return true;
    });
  }
  return cr;
}

// 5. Quasi-conditional expectation ---------------------------------------------------

Dense qce_dense(const MarkovField& f, const QuasiCondExpDescriptor& d, const Dense& a) {
  const Dense k = region_amplitude(f, d.trace_set);
  return trace_sites(adjoint(k) * a * k, ids(d.trace_set), f.state());
}

Index bits_at(Index u, const std::vector<std::size_t>& positions, std::size_t n) {
  Index out = 0;
  for (std::size_t p : positions) out = (out << 1) | ((u & bit_weight(p, n)) ? 1 : 0);
  return out;
}

/// Choi matrix of a ↦ Σ_k λ_k V_k*(a ⊗ 1)V_k with V_k = K_D(|v_k⟩ ⊗ 1), where
/// ρ_D = Σ_k λ_k |v_k⟩⟨v_k|. Rows are (input, output), input most significant.
Mat kraus_choi(const MarkovField& f, const QuasiCondExpDescriptor& d, const std::vector<Site>& all,
               const std::vector<Site>& in, const std::vector<Site>& out) {
  const std::size_t n = all.size();
  const Index dim = Index(1) << n, din = Index(1) << in.size(), dout = Index(1) << out.size();
  const Mat k = lift(region_amplitude(f, d.trace_set), all).m;
  std::vector<std::size_t> pd, po, pi, pe;
  for (std::size_t p = 0; p < n; ++p) {
    const bool traced = d.trace_set.contains(all[p]);
    const bool input = std::binary_search(in.begin(), in.end(), all[p]);
    (traced ? pd : po).push_back(p);
    (input ? pi : pe).push_back(p);
  }
  std::vector<Eigen::SelfAdjointEigenSolver<Mat>> site_eigen;
  for (std::size_t p : pd) site_eigen.emplace_back(f.state().density(all[p]));

  const Index ne = Index(1) << pe.size(), nk = Index(1) << pd.size();
  Mat y = Mat::Zero(din * dout, nk * ne);
  for (Index kk = 0; kk < nk; ++kk) {
    double lambda = 1.0;
    for (std::size_t q = 0; q < pd.size(); ++q)
      lambda *= site_eigen[q].eigenvalues()((kk >> (pd.size() - 1 - q)) & 1);
    Mat m = Mat::Zero(dim, dout);
    for (Index u = 0; u < dim; ++u) {
      Complex v = 1.0;
      for (std::size_t q = 0; q < pd.size(); ++q)
        v *= site_eigen[q].eigenvectors()((u & bit_weight(pd[q], n)) ? 1 : 0, (kk >> (pd.size() - 1 - q)) & 1);
      m(u, bits_at(u, po, n)) = v;
    }
    const Mat vk = k * m;
    for (Index u = 0; u < dim; ++u) {
      const Index i = bits_at(u, pi, n), e = bits_at(u, pe, n);
      for (Index r = 0; r < dout; ++r) y(i * dout + r, kk * ne + e) = std::sqrt(std::max(lambda, 0.0)) * std::conj(vk(u, r));
    }
  }
  return y * y.adjoint();
}

Criterion criterion_qce() {
  Criterion cr;
  Rng rng(5001);
  for (const auto& [name, t, count] : std::vector<std::tuple<std::string, std::shared_ptr<const Tessellation>, int>>{
           {"line", graphs().line, 6}, {"tree", graphs().tree, 4}}) {
    const auto field = conjugated_field(t, rng);
    const GraphWindow& g = t->graph();
    const Region pool = certifiable_vertices(*t);
    int attempt = 0;
    draw(name + " descriptors", count, rng, [&](Rng& r) {
      ++attempt;
      const Region lam1 = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 2)), r);
      const auto lam2 = grow(g, closure(g, lam1), pool, r, 2);
      if (!lam2 || !is_certifiable(*t, *lam2)) return false;
      const auto d = QuasiCondExpDescriptor::make(*field, lam1, *lam2);
      if (d.conjugator.factors.empty() && attempt < 1500) return false;
      const std::vector<Site> in = ids(d.lambda2);
      const std::vector<Site> all = merged(in, amplitude_sites(*field, d.trace_set));
      std::vector<Site> out;
      std::set_difference(all.begin(), all.end(), d.trace_set.ids().begin(), d.trace_set.ids().end(),
                          std::back_inserter(out));
      const Index din = Index(1) << in.size(), dout = Index(1) << out.size();
      if (din * dout > 2048) return false;

      Rng local = r.split(1);
      const auto reports = verify_quasi_cond_expectation(*field, d, local);
      cr.at_most(name + ": unitality (library)", reports.at(0).residual, 1e-10);
      cr.at_least(name + ": Choi min eigenvalue (library)", -reports.at(1).residual, -1e-9);
      cr.at_most(name + ": module property (library)", reports.at(2).residual, 1e-10);

      const Dense one{in, Mat::Identity(din, din)};
      cr.at_most(name + ": unitality (dense)", identity_residual(lift(qce_dense(*field, d, one), out)), 1e-10);

      Region lib_out;
      const Mat lib_choi = choi_matrix(*field, d, &lib_out);
      cr.require(name + ": library Choi output sites", lib_out.ids() == out);
      cr.at_most(name + ": library Choi matrix equals Kraus form (dense)",
                 (lib_choi - kraus_choi(*field, d, all, in, out)).cwiseAbs().maxCoeff(), 1e-9);
      const Mat shifted = lib_choi + 1e-9 * Mat::Identity(lib_choi.rows(), lib_choi.cols());
      cr.require(name + ": Choi + 1e-9 has a Cholesky factor", Eigen::LLT<Mat>(shifted).info() == Eigen::Success);

      const Dense a = dense(random_operator(local, in, std::vector<int>(in.size(), 2)));
      const Dense ea = qce_dense(*field, d, a);
      const std::vector<Site> s1 = ids(d.lambda1);
      const Index n1 = Index(1) << s1.size();
      double worst = 0.0;
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n1; ++j) {
          Dense c{s1, Mat::Zero(n1, n1)};
          c.m(i, j) = 1.0;
          worst = std::max(worst, max_diff(qce_dense(*field, d, c * a), c * ea));
          worst = std::max(worst, max_diff(qce_dense(*field, d, a * c), ea * c));
        }
      cr.at_most(name + ": module property (dense)", worst, 1e-10);
      cr.require(name + ": trace set holds a center", !d.conjugator.factors.empty());
      return true;
    });
  }
  return cr;
}

// 6. Stationarity and projectivity ---------------------------------------------------

/// Σ_s ∏p(s)·∏_y |K_y(s)|²·g(s) for a diagonal edge function and diagonal
/// densities and observable.
double configuration_sum(const Tessellation& t, const State& st, const Region& region, const Operator& g,
                         const std::function<double(int, int)>& edge) {
  const GraphWindow& w = t.graph();
  std::set<Site> all(g.support().begin(), g.support().end());
  std::vector<VertexId> centers;
  for (VertexId y : region)
    if (t.is_center(y)) {
      centers.push_back(y);
      all.insert(y);
      for (VertexId x : w.neighbors(y)) all.insert(x);
    }
  const std::vector<Site> sites(all.begin(), all.end());
  std::map<Site, std::size_t> slot;
  for (std::size_t i = 0; i < sites.size(); ++i) slot[sites[i]] = i;
  double total = 0.0;
  std::vector<int> s(sites.size());
  for (long config = 0; config < (1L << sites.size()); ++config) {
    for (std::size_t i = 0; i < sites.size(); ++i) s[i] = (config >> (sites.size() - 1 - i)) & 1;
    double weight = 1.0;
    for (std::size_t i = 0; i < sites.size(); ++i) weight *= st.density(sites[i])(s[i], s[i]).real();
    for (VertexId y : centers) {
      double b = 0.0;
      for (int sy = 0; sy < 2; ++sy) {
        double prod = st.density(y)(sy, sy).real();
        for (VertexId x : w.neighbors(y)) prod *= std::pow(edge(s[slot[x]], sy), 2);
        b += prod;
      }
      double k2 = 1.0;
      for (VertexId x : w.neighbors(y)) k2 *= std::pow(edge(s[slot[x]], s[slot[y]]), 2);
      weight *= k2 / b;
    }
    Index gi = 0;
    for (Site x : g.support()) gi = (gi << 1) | s[slot[x]];
    total += weight * g.matrix()(gi, gi).real();
  }
  return total;
}

std::function<double(int, int)> ising_edge(double J, double h) {
  return [J, h](int sx, int sy) {
    const double a = sx == 0 ? 1.0 : -1.0, b = sy == 0 ? 1.0 : -1.0;
    return std::exp(J * a * b + h * a + h * b);
  };
}

Criterion criterion_stationarity() {
  Criterion cr;
  Rng rng(6001);
  for (const auto& [name, t] : std::vector<std::pair<std::string, std::shared_ptr<const Tessellation>>>{
           {"line", graphs().line}, {"Z2", graphs().z2}, {"tree", graphs().tree}}) {
    const auto field = conjugated_field(t, rng);
    const GraphWindow& g = t->graph();
    const Region pool = certifiable_vertices(*t);
    draw(name + " stationarity", 30, rng, [&](Rng& r) {
      const Region lam0 = random_connected_region(g, pool, static_cast<std::size_t>(r.uniform_int(1, 2)), r);
      const Region c0 = closure(g, lam0);
      const auto g1 = grow(g, c0, pool, r, 2);
      if (!g1) return false;
      const auto g2 = grow(g, *g1, pool, r, 2);
      if (!g2 || !is_certifiable(*t, *g2) || centers_in(*t, *g2 - c0).empty()) return false;
      const Operator a = random_observable(r, lam0, 2);
      if (dense_support(*field, *g2, a.support()) > kDenseSites) return false;

      cr.at_most(name + ": stationarity (library)", stationarity_probe(*field, lam0, {*g1, *g2}, a).residual, 1e-9);
      const Complex base = state_value(*field, c0, a);
      double worst = 0.0;
      for (const Region& grown : {*g1, *g2}) {
        const Complex v = state_value(*field, grown, a);
        worst = std::max(worst, std::abs(v - base));
        cr.at_most(name + ": library state equals dense value", std::abs(field->finite_volume_state(grown, a) - v), 1e-9);
      }
      cr.at_most(name + ": stationarity (dense)", worst, 1e-9);
      return true;
    });
    cr.at_most(name + ": stationarity suite, 30 unrestricted instances",
               stationarity_suite(*field, rng.split(7), 30).residual, 1e-9);
  }

  // Three-step sequences on the line.
  const auto t = graphs().line;
  const GraphWindow& g = t->graph();
  const auto field = conjugated_field(t, rng);
  cr.at_most("line: projectivity suite, 5 random 3-step sequences",
             projectivity_suite(*field, rng.split(8), 5, 3).residual, 1e-8);
  const std::vector<Region> seq = {line_interval(g, 0, 0), line_interval(g, -2, 2), line_interval(g, -4, 4),
                                   line_interval(g, -6, 6)};
  for (int i = 0; i < 5; ++i) {
    const Operator a = random_observable(rng, seq.front(), 1);
    cr.at_most("line: projectivity on {0} < [-2,2] < [-4,4] < [-6,6]", projectivity_check(*field, seq, a).residual, 1e-8);
  }

  // Telescoped chain against a configuration sum for diagonal inputs.
  for (int i = 0; i < 5; ++i) {
    const double J = rng.uniform(-1.0, 1.0), h = rng.uniform(-0.5, 0.5);
    const auto ising = std::make_shared<const MarkovField>(ising_family(t, J, h), random_state(g, rng, true));
    const Operator a = random_real_diagonal(rng, {g.id(point({0}))}, {2}, -1.0, 1.0);
    Operator b = a;
    for (std::size_t n = seq.size() - 1; n-- > 0;)
      b = quasi_cond_expectation(*ising, QuasiCondExpDescriptor::make(*ising, seq[n], seq[n + 1]), b).value;
    const double exact = configuration_sum(*t, ising->state(), seq.back(), a, ising_edge(J, h));
    cr.at_most("line Ising: telescoped chain vs configuration sum on [-6,6]",
               std::abs(ising->finite_volume_state(seq.front(), b) - exact), 1e-8);
  }
  return cr;
}

// 7. Classical oracle and identity family --------------------------------------------

Criterion criterion_oracle() {
  Criterion cr;
  Rng rng(7001);
  const auto t = graphs().line;
  const GraphWindow& g = t->graph();
  for (int i = 0; i < 20; ++i) {
    const double J = rng.uniform(-1.0, 1.0), h = rng.uniform(-0.5, 0.5);
    const auto field = std::make_shared<const MarkovField>(ising_family(t, J, h), random_state(g, rng, true));
    const int len = rng.uniform_int(1, 6);
    const int lo = rng.uniform_int(-9, 9 - len + 1);
    const Region lam = line_interval(g, lo, lo + len - 1);
    const int glen = rng.uniform_int(1, std::min(3, len));
    const int glo = rng.uniform_int(lo, lo + len - glen);
    std::vector<Site> gs;
    for (int x = glo; x < glo + glen; ++x) gs.push_back(g.id(point({x})));
    std::sort(gs.begin(), gs.end());
    const Operator obs = random_real_diagonal(rng, gs, std::vector<int>(gs.size(), 2), -1.0, 1.0);
    const double exact = configuration_sum(*t, field->state(), lam, obs, ising_edge(J, h));
    cr.at_most("Ising segments <= 6 sites: |state - configuration sum|",
               std::abs(field->finite_volume_state(lam, obs) - exact), 1e-9);
    cr.at_most("Ising segments <= 6 sites: library oracle comparison",
               classical_oracle_compare(*field, lam, obs).residual, 1e-9);
  }

  for (const auto& [name, tess] : std::vector<std::pair<std::string, std::shared_ptr<const Tessellation>>>{
           {"line", graphs().line}, {"Z2", graphs().z2}, {"tree", graphs().tree}}) {
    const auto field = std::make_shared<const MarkovField>(identity_family(tess), random_state(tess->graph(), rng, false));
    const Region pool = certifiable_vertices(*tess);
    for (int i = 0; i < 20; ++i) {
      const Region lam = random_connected_region(tess->graph(), pool, static_cast<std::size_t>(rng.uniform_int(1, 5)), rng);
      const Operator a = random_observable(rng, lam, 3);
      const Complex product_value = expectation(dense(a), field->state());
      cr.at_most("identity family on " + name + ": |state - product state|",
                 std::abs(field->finite_volume_state(lam, a) - product_value), 1e-12);
    }
  }
  return cr;
}

// 8. Determinism --------------------------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Criterion criterion_determinism() {
  Criterion cr;
  for (const std::string name : {"line_ising", "tree3"}) {
    const auto config = cli::load_config(std::string(QMF_CONFIG_DIR) + "/" + name + ".json");
    const std::string first = cli::run(config).report.dump();
    const std::string second = cli::run(config).report.dump();
    cr.require(name + ": two in-process runs give identical report JSON", first == second);
  }
  // The output path is part of the echoed config, so both runs write to it.
  const std::string path = std::string(QMF_TEST_TMP) + "/acceptance_report.json";
  const std::string cmd = std::string(QMF_BINARY) + " report --config " + QMF_CONFIG_DIR +
                          "/z2_conjugated.json --out " + path + " > /dev/null";
  cr.require("binary run exits 0", std::system(cmd.c_str()) == 0);
  const std::string first = slurp(path);
  cr.require("binary run exits 0", std::system(cmd.c_str()) == 0);
  const std::string second = slurp(path);
  cr.require("z2_conjugated: two binary runs give byte-identical files", !first.empty() && first == second);
  return cr;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Criterion()>>> criteria = {
      {"tessellation laws", criterion_tessellation},
      {"plaquette conditional density", criterion_conddensity},
      {"region density and factorization", criterion_region},
      {"localization of outer centers", criterion_localization},
      {"quasi-conditional expectation", criterion_qce},
      {"stationarity and projectivity", criterion_stationarity},
      {"classical oracle and identity family", criterion_oracle},
      {"determinism", criterion_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string note;
    try {
      const Criterion cr = criteria[i].second();
      cr.print();
      pass = cr.pass();
    } catch (const std::exception& e) {
      note = std::string("  error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu  %-40s %s  (%.1f s)%s\n", i + 1, criteria[i].first.c_str(), pass ? "PASS" : "FAIL",
                secs, note.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
