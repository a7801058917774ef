#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "qmf/local_operator.hpp"
#include "qmf/product_state.hpp"

namespace qmf {

/// Ordered product F_0 · F_1 ⋯ F_{m-1}; the scalar 1 for an empty list.
template <typename Scalar>
LocalOperator<Scalar> ordered_product(const std::vector<LocalOperator<Scalar>>& factors) {
  LocalOperator<Scalar> out;
  for (const auto& f : factors) out = multiply(out, f);
  return out;
}

namespace detail {

template <typename Scalar>
Index union_dimension(const LocalOperator<Scalar>& a, const LocalOperator<Scalar>& b) {
  return product(union_support(a, b).second);
}

}  // namespace detail

/// E⁰ over `traced` of K*·a·K with K = F_0 ⋯ F_{m-1}, evaluated without
/// forming K. Factors are applied one at a time (X ← F_i* X F_i) and every
/// traced site is removed right after the last factor acting on it, which
/// keeps the working support small. Throws dimension-cap when an
/// intermediate operator would exceed `cap`; `peak` receives the largest
/// intermediate dimension. With `identity_tol` >= 0 every intermediate is
/// canonicalized, so sites where it acts as the identity drop out.
template <typename Scalar>
LocalOperator<Scalar> conjugate_and_trace(const std::vector<LocalOperator<Scalar>>& factors,
                                          LocalOperator<Scalar> a, std::span<const Site> traced,
                                          const ProductState<Scalar>& state, Index cap,
                                          Index* peak = nullptr, double identity_tol = -1.0) {
  std::map<Site, int> last_touch;
  for (Site s : traced) last_touch[s] = -1;
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (Site s : factors[i].support())
      if (last_touch.contains(s)) last_touch[s] = static_cast<int>(i);

  Index high = a.dimension();
  auto drop_finished = [&](int step) {
    for (const auto& [s, last] : last_touch)
      if (last == step && a.acts_on(s)) a = trace_site(a, s, state.density(s));
    if (identity_tol >= 0.0) a = canonicalize(a, identity_tol);
  };

  drop_finished(-1);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const auto& f = factors[i];
    const Index dim = detail::union_dimension(a, f);
    if (dim > cap) {
      throw Error(ErrorCode::DimensionCap, "intermediate dimension " + std::to_string(dim) +
                                               " exceeds cap " + std::to_string(cap));
    }
    high = std::max(high, dim);
    a = multiply(adjoint(f), multiply(a, f));
    drop_finished(static_cast<int>(i));
  }
  if (peak) *peak = high;
  return a;
}

template <typename Scalar>
LocalOperator<Scalar> conjugate_and_trace(const std::vector<LocalOperator<Scalar>>& factors,
                                          LocalOperator<Scalar> a,
                                          const std::vector<Site>& traced,
                                          const ProductState<Scalar>& state, Index cap,
                                          Index* peak = nullptr, double identity_tol = -1.0) {
  return conjugate_and_trace(factors, std::move(a), std::span<const Site>(traced), state, cap,
                             peak, identity_tol);
}

}  // namespace qmf
