#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qmf/local_operator.hpp"

namespace qmf {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seeded generator with platform-independent conversions (the standard
/// distributions are implementation-defined, so they are avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  /// Independent stream for job `job`; the parent state is untouched.
  Rng split(std::uint64_t job) const { return Rng(splitmix64(seed_ ^ splitmix64(job + 1))); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Complex complex_normal() { return {normal(), normal()}; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline Operator::Matrix random_matrix(Rng& rng, Index n) {
  Operator::Matrix m(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = rng.complex_normal();
  return m;
}

/// Operator with independent complex Gaussian entries.
inline Operator random_operator(Rng& rng, std::vector<Site> support, std::vector<int> dims) {
  const Index n = detail::product(dims);
  return Operator(std::move(support), std::move(dims), random_matrix(rng, n));
}

/// Random diagonal operator with real entries in [lo, hi].
inline Operator random_real_diagonal(Rng& rng, std::vector<Site> support, std::vector<int> dims,
                                     double lo, double hi) {
  const Index n = detail::product(dims);
  Operator::Matrix m = Operator::Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = rng.uniform(lo, hi);
  return Operator(std::move(support), std::move(dims), std::move(m));
}

/// Haar-like unitary from the QR factorization of a Gaussian matrix.
inline Operator::Matrix random_unitary(Rng& rng, Index n) {
  Eigen::HouseholderQR<Operator::Matrix> qr(random_matrix(rng, n));
  Operator::Matrix q = qr.householderQ() * Operator::Matrix::Identity(n, n);
  const Operator::Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

/// Full-rank density matrix: normalized G·G* plus a small identity shift.
inline Operator::Matrix random_density(Rng& rng, Index n) {
  const Operator::Matrix g = random_matrix(rng, n);
  Operator::Matrix rho = g * g.adjoint() + 0.1 * Operator::Matrix::Identity(n, n);
  rho = (rho + rho.adjoint()).eval() / Complex(2.0);
  return rho / rho.trace();
}

inline Operator::Matrix random_diagonal_density(Rng& rng, Index n) {
  Operator::Matrix rho = Operator::Matrix::Zero(n, n);
  double total = 0;
  for (Index i = 0; i < n; ++i) {
    const double p = rng.uniform(0.1, 1.0);
    rho(i, i) = p;
    total += p;
  }
  return rho / Complex(total);
}

}  // namespace qmf
