#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmf/error.hpp"

namespace qmf {

/// Site index. Sites are ordered by their integer value, which is the
/// canonical vertex order of the owning graph window.
using Site = int;
using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Local Hilbert-space dimension of every site: a uniform default plus
/// per-site overrides.
class SiteModel {
 public:
  explicit SiteModel(int default_dim = 2) : default_dim_(default_dim) {
    if (default_dim < 1) {
      throw Error(ErrorCode::DimensionMismatch, "site dimension must be >= 1");
    }
  }

  int dim(Site site) const {
    auto it = overrides_.find(site);
    return it == overrides_.end() ? default_dim_ : it->second;
  }

  void set_dim(Site site, int dim) {
    if (dim < 1) {
      throw Error(ErrorCode::DimensionMismatch,
                  "site " + std::to_string(site) + " dimension must be >= 1");
    }
    overrides_[site] = dim;
  }

  std::vector<int> dims(std::span<const Site> sites) const {
    std::vector<int> out;
    out.reserve(sites.size());
    for (Site s : sites) out.push_back(dim(s));
    return out;
  }

  int default_dim() const { return default_dim_; }
  const std::map<Site, int>& overrides() const { return overrides_; }

 private:
  int default_dim_;
  std::map<Site, int> overrides_;
};

namespace detail {

inline Index product(std::span<const int> dims) {
  Index n = 1;
  for (int d : dims) n *= d;
  return n;
}

/// Row-major (most significant first) mixed-radix strides.
inline std::vector<Index> strides(std::span<const int> dims) {
  std::vector<Index> out(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) out[i - 1] = out[i] * dims[i];
  return out;
}

/// Offsets, within the full register, of every configuration of the
/// sub-register at `positions` (ascending). The first listed position is the
/// most significant digit, so offsets come out in the sub-register's own
/// index order.
inline std::vector<Index> register_offsets(std::span<const int> dims,
                                           std::span<const std::size_t> positions) {
  const auto st = strides(dims);
  std::vector<Index> offsets{0};
  for (std::size_t p : positions) {
    std::vector<Index> next;
    next.reserve(offsets.size() * dims[p]);
    for (Index o : offsets)
      for (int d = 0; d < dims[p]; ++d) next.push_back(o + d * st[p]);
    offsets.swap(next);
  }
  return offsets;
}

inline std::vector<std::size_t> complement_positions(std::size_t n,
                                                     std::span<const std::size_t> positions) {
  std::vector<std::size_t> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < positions.size() && positions[j] == i) {
      ++j;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

inline std::string format_sites(std::span<const Site> sites) {
  std::string s = "{";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(sites[i]);
  }
  return s + "}";
}

}  // namespace detail

/// A finitely supported operator: a dense square matrix acting on the tensor
/// product of the Hilbert spaces of its support sites.
///
/// The support is strictly ascending. Row and column indices are mixed-radix
/// encodings of the site states with the smallest site as the most
/// significant digit.
template <typename Scalar>
class LocalOperator {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;

  /// The scalar 1 (identity with empty support).
  LocalOperator() : matrix_(Matrix::Identity(1, 1)) {}

  LocalOperator(std::vector<Site> support, std::vector<int> dims, Matrix matrix)
      : support_(std::move(support)), dims_(std::move(dims)), matrix_(std::move(matrix)) {
    if (support_.size() != dims_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "support and dims differ in length");
    }
    for (std::size_t i = 1; i < support_.size(); ++i) {
      if (support_[i - 1] >= support_[i]) {
        throw Error(ErrorCode::DimensionMismatch,
                    "support must be strictly ascending: " + detail::format_sites(support_));
      }
    }
    for (int d : dims_) {
      if (d < 1) throw Error(ErrorCode::DimensionMismatch, "site dimension must be >= 1");
    }
    const Index n = detail::product(dims_);
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "matrix is " + std::to_string(matrix_.rows()) + "x" +
                      std::to_string(matrix_.cols()) + ", support dimension is " +
                      std::to_string(n));
    }
  }

  static LocalOperator identity(std::vector<Site> support, std::vector<int> dims) {
    const Index n = detail::product(dims);
    return LocalOperator(std::move(support), std::move(dims), Matrix::Identity(n, n));
  }

  static LocalOperator scalar(Scalar value) {
    Matrix m(1, 1);
    m(0, 0) = value;
    return LocalOperator({}, {}, std::move(m));
  }

  /// Builds an operator whose matrix is indexed with `sites` in the listed
  /// order (first listed = most significant); the tensor factors are
  /// permuted into ascending site order.
  static LocalOperator from_ordered(const std::vector<Site>& sites, const std::vector<int>& dims,
                                    const Matrix& matrix) {
    if (sites.size() != dims.size()) {
      throw Error(ErrorCode::DimensionMismatch, "sites and dims differ in length");
    }
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sites[a] < sites[b]; });
    std::vector<Site> sorted_sites;
    std::vector<int> sorted_dims;
    for (std::size_t i : order) {
      if (!sorted_sites.empty() && sorted_sites.back() == sites[i]) {
        throw Error(ErrorCode::DimensionMismatch, "duplicate site " + std::to_string(sites[i]));
      }
      sorted_sites.push_back(sites[i]);
      sorted_dims.push_back(dims[i]);
    }
    const Index n = detail::product(dims);
    if (matrix.rows() != n || matrix.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "matrix size does not match listed dims");
    }
    // Offset of each given-order index in the sorted register.
    const auto sorted_strides = detail::strides(sorted_dims);
    std::vector<Index> given_stride_in_sorted(sites.size());
    for (std::size_t k = 0; k < order.size(); ++k) given_stride_in_sorted[order[k]] = sorted_strides[k];
    std::vector<Index> map(static_cast<std::size_t>(n), 0);
    std::vector<int> digits(sites.size(), 0);
    for (Index i = 0; i < n; ++i) {
      Index target = 0;
      for (std::size_t p = 0; p < sites.size(); ++p) target += digits[p] * given_stride_in_sorted[p];
      map[static_cast<std::size_t>(i)] = target;
      for (std::size_t p = sites.size(); p-- > 0;) {
        if (++digits[p] < dims[p]) break;
        digits[p] = 0;
      }
    }
    Matrix out(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) out(map[i], map[j]) = matrix(i, j);
    return LocalOperator(std::move(sorted_sites), std::move(sorted_dims), std::move(out));
  }

  const std::vector<Site>& support() const { return support_; }
  const std::vector<int>& dims() const { return dims_; }
  const Matrix& matrix() const { return matrix_; }
  Index dimension() const { return matrix_.rows(); }

  std::optional<std::size_t> position(Site site) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), site);
    if (it == support_.end() || *it != site) return std::nullopt;
    return static_cast<std::size_t>(it - support_.begin());
  }

  bool acts_on(Site site) const { return position(site).has_value(); }

  RealScalar max_abs() const { return matrix_.cwiseAbs().maxCoeff(); }

 private:
  std::vector<Site> support_;
  std::vector<int> dims_;
  Matrix matrix_;
};

using Operator = LocalOperator<Complex>;

namespace detail {

/// Union of two supports with dimensions, checking shared sites agree.
template <typename Scalar>
std::pair<std::vector<Site>, std::vector<int>> union_support(const LocalOperator<Scalar>& a,
                                                             const LocalOperator<Scalar>& b) {
  std::vector<Site> sites;
  std::vector<int> dims;
  std::size_t i = 0, j = 0;
  const auto& sa = a.support();
  const auto& sb = b.support();
  while (i < sa.size() || j < sb.size()) {
    if (j == sb.size() || (i < sa.size() && sa[i] < sb[j])) {
      sites.push_back(sa[i]);
      dims.push_back(a.dims()[i]);
      ++i;
    } else if (i == sa.size() || sb[j] < sa[i]) {
      sites.push_back(sb[j]);
      dims.push_back(b.dims()[j]);
      ++j;
    } else {
      if (a.dims()[i] != b.dims()[j]) {
        throw Error(ErrorCode::DimensionMismatch,
                    "site " + std::to_string(sa[i]) + " has dimension " +
                        std::to_string(a.dims()[i]) + " vs " + std::to_string(b.dims()[j]));
      }
      sites.push_back(sa[i]);
      dims.push_back(a.dims()[i]);
      ++i;
      ++j;
    }
  }
  return {std::move(sites), std::move(dims)};
}

/// Positions of `sub` inside `full` (both ascending).
inline std::vector<std::size_t> positions_of(std::span<const Site> sub, std::span<const Site> full) {
  std::vector<std::size_t> pos;
  pos.reserve(sub.size());
  std::size_t j = 0;
  for (Site s : sub) {
    while (j < full.size() && full[j] < s) ++j;
    if (j == full.size() || full[j] != s) {
      throw Error(ErrorCode::SupportNotContained,
                  "site " + std::to_string(s) + " not in " + format_sites(full));
    }
    pos.push_back(j++);
  }
  return pos;
}

/// (a ⊗ I) · b, where supp(a) ⊆ supp(b).
template <typename Scalar>
LocalOperator<Scalar> apply_left(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  const auto pos = positions_of(a.support(), b.support());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    if (a.dims()[k] != b.dims()[pos[k]]) {
      throw Error(ErrorCode::DimensionMismatch, "site " + std::to_string(a.support()[k]));
    }
  }
  const auto off = register_offsets(b.dims(), pos);
  const auto bases = register_offsets(b.dims(), complement_positions(b.dims().size(), pos));
  const Index n = b.dimension();
  const Index da = a.dimension();
  Matrix out(n, n);
  Matrix gathered(da, n);
  for (Index base : bases) {
    for (Index k = 0; k < da; ++k) gathered.row(k) = b.matrix().row(base + off[k]);
    Matrix mixed = a.matrix() * gathered;
    for (Index k = 0; k < da; ++k) out.row(base + off[k]) = mixed.row(k);
  }
  return LocalOperator<Scalar>(b.support(), b.dims(), std::move(out));
}

/// b · (a ⊗ I), where supp(a) ⊆ supp(b).
template <typename Scalar>
LocalOperator<Scalar> apply_right(const LocalOperator<Scalar>& b, const LocalOperator<Scalar>& a) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  const auto pos = positions_of(a.support(), b.support());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    if (a.dims()[k] != b.dims()[pos[k]]) {
      throw Error(ErrorCode::DimensionMismatch, "site " + std::to_string(a.support()[k]));
    }
  }
  const auto off = register_offsets(b.dims(), pos);
  const auto bases = register_offsets(b.dims(), complement_positions(b.dims().size(), pos));
  const Index n = b.dimension();
  const Index da = a.dimension();
  Matrix out(n, n);
  Matrix gathered(n, da);
  for (Index base : bases) {
    for (Index k = 0; k < da; ++k) gathered.col(k) = b.matrix().col(base + off[k]);
    Matrix mixed = gathered * a.matrix();
    for (Index k = 0; k < da; ++k) out.col(base + off[k]) = mixed.col(k);
  }
  return LocalOperator<Scalar>(b.support(), b.dims(), std::move(out));
}

}  // namespace detail

/// a ⊗ id on the sites of `target` not in supp(a).
template <typename Scalar>
LocalOperator<Scalar> embed(const LocalOperator<Scalar>& a, std::vector<Site> target,
                            std::vector<int> target_dims) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  if (target.size() != target_dims.size()) {
    throw Error(ErrorCode::DimensionMismatch, "target support and dims differ in length");
  }
  const auto pos = detail::positions_of(a.support(), target);
  for (std::size_t k = 0; k < pos.size(); ++k) {
    if (a.dims()[k] != target_dims[pos[k]]) {
      throw Error(ErrorCode::DimensionMismatch, "site " + std::to_string(a.support()[k]));
    }
  }
  const auto off = detail::register_offsets(target_dims, pos);
  const auto bases =
      detail::register_offsets(target_dims, detail::complement_positions(target.size(), pos));
  const Index n = detail::product(target_dims);
  const Index da = a.dimension();
  Matrix out = Matrix::Zero(n, n);
  for (Index base : bases)
    for (Index l = 0; l < da; ++l)
      for (Index k = 0; k < da; ++k) out(base + off[k], base + off[l]) = a.matrix()(k, l);
  return LocalOperator<Scalar>(std::move(target), std::move(target_dims), std::move(out));
}

template <typename Scalar>
LocalOperator<Scalar> embed(const LocalOperator<Scalar>& a, std::vector<Site> target,
                            const SiteModel& sites) {
  auto dims = sites.dims(target);
  return embed(a, std::move(target), std::move(dims));
}

template <typename Scalar>
LocalOperator<Scalar> adjoint(const LocalOperator<Scalar>& a) {
  return LocalOperator<Scalar>(a.support(), a.dims(), a.matrix().adjoint());
}

/// Operator product on the union of the supports. Factors acting on a
/// strict subset of the other operand's support are applied structurally
/// instead of being embedded first.
template <typename Scalar>
LocalOperator<Scalar> multiply(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  auto [sites, dims] = detail::union_support(a, b);
  const bool a_full = a.support().size() == sites.size();
  const bool b_full = b.support().size() == sites.size();
  if (a_full && b_full) {
    return LocalOperator<Scalar>(std::move(sites), std::move(dims), a.matrix() * b.matrix());
  }
  if (b_full) return detail::apply_left(a, b);
  if (a_full) return detail::apply_right(a, b);
  return detail::apply_right(embed(a, std::move(sites), std::move(dims)), b);
}

template <typename Scalar>
LocalOperator<Scalar> operator*(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  return multiply(a, b);
}

template <typename Scalar>
LocalOperator<Scalar> operator*(Scalar c, const LocalOperator<Scalar>& a) {
  return LocalOperator<Scalar>(a.support(), a.dims(), c * a.matrix());
}

template <typename Scalar>
LocalOperator<Scalar> operator+(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  auto [sites, dims] = detail::union_support(a, b);
  auto ea = embed(a, sites, dims);
  auto eb = embed(b, sites, dims);
  return LocalOperator<Scalar>(std::move(sites), std::move(dims), ea.matrix() + eb.matrix());
}

template <typename Scalar>
LocalOperator<Scalar> operator-(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  return a + (Scalar(-1) * b);
}

/// Weighted partial trace of one site: the coefficient of a_x is
/// trace(weight · a_x). Removes the site from the support.
template <typename Scalar>
LocalOperator<Scalar> trace_site(const LocalOperator<Scalar>& a, Site site,
                                 const typename LocalOperator<Scalar>::Matrix& weight) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  const auto p = a.position(site);
  if (!p) return a;
  const int d = a.dims()[*p];
  if (weight.rows() != d || weight.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "weight for site " + std::to_string(site));
  }
  const std::size_t pos_arr[1] = {*p};
  const auto stride = detail::strides(a.dims())[*p];
  const auto bases = detail::register_offsets(
      a.dims(), detail::complement_positions(a.support().size(), pos_arr));
  const Index nr = static_cast<Index>(bases.size());
  Matrix out = Matrix::Zero(nr, nr);
  std::vector<Index> rows(bases.size()), cols(bases.size());
  for (int s = 0; s < d; ++s) {
    for (std::size_t i = 0; i < bases.size(); ++i) rows[i] = bases[i] + s * stride;
    for (int t = 0; t < d; ++t) {
      const Scalar w = weight(t, s);
      if (w == Scalar(0)) continue;
      for (std::size_t i = 0; i < bases.size(); ++i) cols[i] = bases[i] + t * stride;
      out += w * a.matrix()(rows, cols);
    }
  }
  std::vector<Site> sites = a.support();
  std::vector<int> dims = a.dims();
  sites.erase(sites.begin() + static_cast<std::ptrdiff_t>(*p));
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(*p));
  return LocalOperator<Scalar>(std::move(sites), std::move(dims), std::move(out));
}

/// Drops every support site on which `a` acts as the identity, up to
/// `rel_tol` relative to the largest matrix entry.
template <typename Scalar>
LocalOperator<Scalar> canonicalize(LocalOperator<Scalar> a, double rel_tol = 1e-12) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  const double scale = std::max<double>(a.max_abs(), std::numeric_limits<double>::min());
  const std::vector<Site> sites = a.support();
  for (Site s : sites) {
    const int d = a.dims()[*a.position(s)];
    Matrix uniform = Matrix::Identity(d, d) / static_cast<Scalar>(d);
    auto reduced = trace_site(a, s, uniform);
    auto back = embed(reduced, a.support(), a.dims());
    if ((a.matrix() - back.matrix()).cwiseAbs().maxCoeff() <= rel_tol * scale) a = std::move(reduced);
  }
  return a;
}

/// Largest entrywise deviation after aligning both operators to the union of
/// their supports.
template <typename Scalar>
double max_abs_diff(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  if (a.support() == b.support()) {
    if (a.dims() != b.dims()) throw Error(ErrorCode::DimensionMismatch, "dims differ");
    return static_cast<double>((a.matrix() - b.matrix()).cwiseAbs().maxCoeff());
  }
  auto [sites, dims] = detail::union_support(a, b);
  auto ea = embed(a, sites, dims);
  auto eb = embed(b, sites, dims);
  return static_cast<double>((ea.matrix() - eb.matrix()).cwiseAbs().maxCoeff());
}

/// Residual of `a` against the identity on its own support.
template <typename Scalar>
double identity_residual(const LocalOperator<Scalar>& a) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  return static_cast<double>(
      (a.matrix() - Matrix::Identity(a.dimension(), a.dimension())).cwiseAbs().maxCoeff());
}

template <typename Scalar>
bool is_diagonal(const LocalOperator<Scalar>& a, double tol = 0.0) {
  const auto& m = a.matrix();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && std::abs(m(i, j)) > tol) return false;
  return true;
}

template <typename Derived>
double hermiticity_residual(const Eigen::MatrixBase<Derived>& m) {
  return static_cast<double>((m - m.adjoint()).cwiseAbs().maxCoeff());
}

/// Smallest eigenvalue of the Hermitian part of `m`.
template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix h = (m + m.adjoint()) / typename Derived::Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return static_cast<double>(es.eigenvalues().minCoeff());
}

/// a^{-1/2} for a Hermitian positive definite `a`; throws when the smallest
/// eigenvalue is below `floor`. The result r satisfies r·a·r = id.
template <typename Scalar>
LocalOperator<Scalar> inv_sqrt_psd(const LocalOperator<Scalar>& a, double floor,
                                   double hermitian_tol = 1e-10) {
  using Matrix = typename LocalOperator<Scalar>::Matrix;
  const double herm = hermiticity_residual(a.matrix());
  if (herm > hermitian_tol * std::max(1.0, static_cast<double>(a.max_abs()))) {
    throw Error(ErrorCode::NotHermitian,
                "residual " + std::to_string(herm) + " on " + detail::format_sites(a.support()));
  }
  Matrix h = (a.matrix() + a.matrix().adjoint()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const double lo = static_cast<double>(es.eigenvalues().minCoeff());
  if (!(lo >= floor)) {
    throw Error(ErrorCode::EigenvalueBelowFloor,
                "min eigenvalue " + std::to_string(lo) + " < floor " + std::to_string(floor) +
                    " on " + detail::format_sites(a.support()));
  }
  const auto inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse().template cast<Scalar>().eval();
  Matrix out = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
  return LocalOperator<Scalar>(a.support(), a.dims(), std::move(out));
}

}  // namespace qmf
