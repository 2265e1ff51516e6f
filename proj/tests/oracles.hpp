// Test-only oracles, independent of the library paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qet/linalg.hpp"
#include "qet/rng.hpp"

namespace oracles {

using qet::Complex;
using qet::Matrix;
using qet::StateVector;

// Ground state by shifted power iteration on (s I - A): independent of the
// Jacobi path. Returns the (eigenvalue, unit eigenvector) of A's minimum.
inline std::pair<double, StateVector> power_iteration_ground(const Matrix& a,
                                                             int iters = 20000) {
  const std::size_t d = a.dim();
  // Gershgorin upper bound for the shift.
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < d; ++j) row += std::abs(a.at(i, j));
    s = std::max(s, row);
  }
  Matrix shifted = Matrix::identity(d) * Complex{s, 0} - a;
  StateVector v(d);
  for (std::size_t i = 0; i < d; ++i)
    v[i] = Complex{1.0 + 0.01 * double(i % 7), 0.003 * double(i % 5)};
  v.normalize();
  for (int it = 0; it < iters; ++it) {
    v = qet::apply(shifted, v);
    v.normalize();
  }
  const double lambda = qet::expectation(v, a);
  return {lambda, v};
}

// Deterministic random Hermitian matrix from the shared counter generator.
inline Matrix random_hermitian(std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  Matrix m(dim);
  std::uint64_t ctr = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    m.at(i, i) = Complex{2.0 * qet::CounterRng::uniform(seed, 0xabcd, index * 1000 + ctr++) - 1.0, 0};
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double re = 2.0 * qet::CounterRng::uniform(seed, 0xabcd, index * 1000 + ctr++) - 1.0;
      const double im = 2.0 * qet::CounterRng::uniform(seed, 0xabcd, index * 1000 + ctr++) - 1.0;
      m.at(i, j) = Complex{re, im};
      m.at(j, i) = Complex{re, -im};
    }
  }
  return m;
}

inline StateVector random_state(std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  StateVector v(dim);
  std::uint64_t ctr = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double re = 2.0 * qet::CounterRng::uniform(seed, 0xfeed, index * 100 + ctr++) - 1.0;
    const double im = 2.0 * qet::CounterRng::uniform(seed, 0xfeed, index * 100 + ctr++) - 1.0;
    v[i] = Complex{re, im};
  }
  v.normalize();
  return v;
}

// Plain elementwise Kronecker product written independently of the library.
inline Matrix kron_brute(const Matrix& a, const Matrix& b) {
  Matrix r(a.dim() * b.dim());
  for (std::size_t i = 0; i < a.dim() * b.dim(); ++i)
    for (std::size_t j = 0; j < a.dim() * b.dim(); ++j)
      r.at(i, j) = a.at(i / b.dim(), j / b.dim()) * b.at(i % b.dim(), j % b.dim());
  return r;
}

}  // namespace oracles
