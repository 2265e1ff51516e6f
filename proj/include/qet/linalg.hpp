#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qet {

using Complex = std::complex<double>;

// Shared numeric tolerances. Dimension-8 arithmetic accumulates negligible
// error, so identity checks run at 1e-9 relative and state validity at
// 1e-10 absolute.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kAlgebraTol = 1e-9;
inline constexpr double kDegenerateGapTol = 1e-10;

//=========================================================================
// Dense complex matrix (row-major). Dimensions here are tiny (<= 8), so
// everything is plain O(d^3) with no blocking or sparsity.
//=========================================================================

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim) : dim_(dim), a_(dim * dim, Complex{0, 0}) {}

  static Matrix identity(std::size_t dim);
  // 2x2 from row-major entries.
  static Matrix two_by_two(Complex a00, Complex a01, Complex a10, Complex a11);

  std::size_t dim() const { return dim_; }
  Complex& at(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
  const Complex& at(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix operator*(const Matrix& o) const;
  Matrix operator*(Complex s) const;
  Matrix& operator+=(const Matrix& o);

  Matrix adjoint() const;
  Complex trace() const;
  double frobenius_norm() const;
  double max_abs() const;

  bool is_hermitian(double tol = kHermitianTol) const;

  // Largest |a_ij - b_ij|.
  static double max_abs_diff(const Matrix& a, const Matrix& b);

 private:
  std::size_t dim_ = 0;
  std::vector<Complex> a_;
};

Matrix operator*(Complex s, const Matrix& m);

//=========================================================================
// States
//=========================================================================

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t dim) : amps_(dim, Complex{0, 0}) {}
  explicit StateVector(std::vector<Complex> amps) : amps_(std::move(amps)) {}

  // |index> on n qubits; qubit 0 is the most significant bit of index.
  static StateVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const { return amps_.size(); }
  int n_qubits() const;
  Complex& operator[](std::size_t i) { return amps_[i]; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm() const;
  void normalize();  // throws on zero vector

  static Complex inner(const StateVector& a, const StateVector& b);  // <a|b>

 private:
  std::vector<Complex> amps_;
};

// |psi><psi|
Matrix outer(const StateVector& psi);
StateVector apply(const Matrix& m, const StateVector& psi);

// Validated density matrix: Hermitian within 1e-12, unit trace within
// 1e-10, eigenvalues >= -1e-10.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  // Validates all three invariants; throws std::invalid_argument on failure.
  static DensityMatrix checked(Matrix m);
  // Skips the eigenvalue scan (used on hot paths where PSD holds by
  // construction from a projector/unitary ensemble).
  static DensityMatrix unchecked(Matrix m);

  const Matrix& mat() const { return mat_; }
  std::size_t dim() const { return mat_.dim(); }

 private:
  explicit DensityMatrix(Matrix m) : mat_(std::move(m)) {}
  Matrix mat_;
};

//=========================================================================
// Pauli algebra and qubit embeddings
//=========================================================================

const Matrix& pauli_x();
const Matrix& pauli_y();
const Matrix& pauli_z();
const Matrix& hadamard_gate();
const Matrix& identity2();

// Kronecker products; the left factor is qubit 0 (most significant).
Matrix kron(const Matrix& a, const Matrix& b);
StateVector kron(const StateVector& a, const StateVector& b);

// Places `op` (2x2 for one site, 4x4 for two sites) on `sites` of an
// n-qubit register, identity elsewhere. Site indices must be distinct and
// in [0, n).
Matrix embed(const Matrix& op, const std::vector<int>& sites, int n_qubits);

//=========================================================================
// Hermitian eigenproblem (cyclic complex Jacobi)
//=========================================================================

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // orthonormal columns, column i <-> eigenvalue i
};

// Deterministic for a fixed input: fixed sweep order, eigenvalues sorted
// ascending, each column's largest entry made real positive, degenerate
// clusters (gap < 1e-10) re-orthonormalized by Gram-Schmidt in index
// order. Throws on non-Hermitian input or if 100 sweeps do not converge.
EigenDecomposition eigh(const Matrix& op);

double expectation(const StateVector& psi, const Matrix& op);
double expectation(const DensityMatrix& rho, const Matrix& op);

// exp(-i t H) via the eigendecomposition; unitary within 1e-9.
Matrix evolve(const Matrix& hermitian, double t);

// Reduced density matrix over `keep` (ascending site order preserved).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep,
                            int n_qubits);

// -sum(lambda ln lambda), 0 ln 0 := 0, in nats. Throws if an eigenvalue
// is below -1e-8.
double von_neumann_entropy(const DensityMatrix& rho);

}  // namespace qet
