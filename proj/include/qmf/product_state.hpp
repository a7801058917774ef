#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qmf/local_operator.hpp"

namespace qmf {

/// The product reference state: one density matrix per site, maximally
/// mixed unless set explicitly.
template <typename Scalar>
class ProductState {
 public:
  using Matrix = typename LocalOperator<Scalar>::Matrix;

  explicit ProductState(SiteModel sites = SiteModel{}) : sites_(std::move(sites)) {}

  /// Sets ρ_site. Rejects matrices that are not Hermitian, not positive
  /// semidefinite or not of unit trace (tolerance `tol`).
  void set_density(Site site, Matrix rho, double tol = 1e-12) {
    const int d = sites_.dim(site);
    if (rho.rows() != d || rho.cols() != d) {
      throw Error(ErrorCode::DimensionMismatch,
                  "density for site " + std::to_string(site) + " must be " + std::to_string(d) +
                      "x" + std::to_string(d));
    }
    const double herm = hermiticity_residual(rho);
    if (herm > tol) {
      throw Error(ErrorCode::InvalidState,
                  "density at site " + std::to_string(site) + " not Hermitian (" +
                      std::to_string(herm) + ")");
    }
    const double tr_err = std::abs(rho.trace() - Scalar(1));
    if (tr_err > tol) {
      throw Error(ErrorCode::InvalidState,
                  "density at site " + std::to_string(site) + " trace deviates by " +
                      std::to_string(tr_err));
    }
    const double lo = min_eigenvalue(rho);
    if (lo < -tol) {
      throw Error(ErrorCode::InvalidState,
                  "density at site " + std::to_string(site) + " has eigenvalue " +
                      std::to_string(lo));
    }
    densities_[site] = std::move(rho);
  }

  Matrix density(Site site) const {
    auto it = densities_.find(site);
    if (it != densities_.end()) return it->second;
    const int d = sites_.dim(site);
    return Matrix::Identity(d, d) / Scalar(static_cast<double>(d));
  }

  bool is_maximally_mixed(Site site) const { return !densities_.contains(site); }

  const SiteModel& site_model() const { return sites_; }
  const std::map<Site, Matrix>& explicit_densities() const { return densities_; }

 private:
  SiteModel sites_;
  std::map<Site, Matrix> densities_;
};

using State = ProductState<Complex>;

/// The φ⁰-conditional expectation onto the algebra of the complement of
/// `traced`: each traced site in supp(a) is removed by the weighted partial
/// trace with its ρ. Sites of `traced` outside supp(a) do not act.
template <typename Scalar>
LocalOperator<Scalar> umegaki_expect(LocalOperator<Scalar> a, std::span<const Site> traced,
                                     const ProductState<Scalar>& state) {
  for (Site s : traced) {
    if (a.acts_on(s)) a = trace_site(a, s, state.density(s));
  }
  return a;
}

template <typename Scalar>
LocalOperator<Scalar> umegaki_expect(LocalOperator<Scalar> a, const std::vector<Site>& traced,
                                     const ProductState<Scalar>& state) {
  return umegaki_expect(std::move(a), std::span<const Site>(traced), state);
}

/// φ⁰(a): the full weighted trace.
template <typename Scalar>
Scalar expect_value(const LocalOperator<Scalar>& a, const ProductState<Scalar>& state) {
  const std::vector<Site> all = a.support();
  auto reduced = umegaki_expect(a, all, state);
  return reduced.matrix()(0, 0);
}

}  // namespace qmf
