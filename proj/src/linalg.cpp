#include "qet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qet {

//=========================================================================
// Matrix
//=========================================================================

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.at(i, i) = Complex{1, 0};
  return m;
}

Matrix Matrix::two_by_two(Complex a00, Complex a01, Complex a10, Complex a11) {
  Matrix m(2);
  m.at(0, 0) = a00;
  m.at(0, 1) = a01;
  m.at(1, 0) = a10;
  m.at(1, 1) = a11;
  return m;
}

Matrix Matrix::operator+(const Matrix& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch in +");
  Matrix r(dim_);
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] + o.a_[i];
  return r;
}

Matrix Matrix::operator-(const Matrix& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch in -");
  Matrix r(dim_);
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] - o.a_[i];
  return r;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch in *");
  Matrix r(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t l = 0; l < dim_; ++l) {
      const Complex v = a_[i * dim_ + l];
      if (v == Complex{0, 0}) continue;
      for (std::size_t j = 0; j < dim_; ++j) r.a_[i * dim_ + j] += v * o.a_[l * dim_ + j];
    }
  }
  return r;
}

Matrix Matrix::operator*(Complex s) const {
  Matrix r(dim_);
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] * s;
  return r;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch in +=");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

Matrix operator*(Complex s, const Matrix& m) { return m * s; }

Matrix Matrix::adjoint() const {
  Matrix r(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) r.at(j, i) = std::conj(at(i, j));
  return r;
}

Complex Matrix::trace() const {
  Complex t{0, 0};
  for (std::size_t i = 0; i < dim_; ++i) t += at(i, i);
  return t;
}

double Matrix::frobenius_norm() const {
  double s = 0;
  for (const Complex& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0;
  for (const Complex& v : a_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::is_hermitian(double tol) const {
  const double scale = std::max(1.0, max_abs());
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j)
      if (std::abs(at(i, j) - std::conj(at(j, i))) > tol * scale) return false;
  return true;
}

double Matrix::max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix dimension mismatch in diff");
  double m = 0;
  for (std::size_t i = 0; i < a.a_.size(); ++i) m = std::max(m, std::abs(a.a_[i] - b.a_[i]));
  return m;
}

//=========================================================================
// StateVector / DensityMatrix
//=========================================================================

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::invalid_argument("basis index out of range");
  StateVector s(dim);
  s[index] = Complex{1, 0};
  return s;
}

int StateVector::n_qubits() const {
  int n = 0;
  std::size_t d = amps_.size();
  while (d > 1) {
    if (d % 2 != 0) throw std::logic_error("state dimension is not a power of two");
    d /= 2;
    ++n;
  }
  return n;
}

double StateVector::norm() const {
  double s = 0;
  for (const Complex& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

void StateVector::normalize() {
  const double n = norm();
  if (n == 0) throw std::domain_error("cannot normalize the zero vector");
  for (Complex& a : amps_) a /= n;
}

Complex StateVector::inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("state dimension mismatch");
  Complex s{0, 0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

Matrix outer(const StateVector& psi) {
  Matrix m(psi.dim());
  for (std::size_t i = 0; i < psi.dim(); ++i)
    for (std::size_t j = 0; j < psi.dim(); ++j) m.at(i, j) = psi[i] * std::conj(psi[j]);
  return m;
}

StateVector apply(const Matrix& m, const StateVector& psi) {
  if (m.dim() != psi.dim()) throw std::invalid_argument("operator/state dimension mismatch");
  StateVector r(psi.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Complex s{0, 0};
    for (std::size_t j = 0; j < m.dim(); ++j) s += m.at(i, j) * psi[j];
    r[i] = s;
  }
  return r;
}

DensityMatrix DensityMatrix::checked(Matrix m) {
  if (!m.is_hermitian(kHermitianTol))
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(m.trace() - Complex{1, 0}) > kTraceTol)
    throw std::invalid_argument("density matrix trace differs from 1");
  const EigenDecomposition ed = eigh(m);
  if (ed.eigenvalues.front() < -kPsdTol)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::unchecked(Matrix m) { return DensityMatrix(std::move(m)); }

//=========================================================================
// Pauli constants
//=========================================================================

const Matrix& pauli_x() {
  static const Matrix m = Matrix::two_by_two({0, 0}, {1, 0}, {1, 0}, {0, 0});
  return m;
}
const Matrix& pauli_y() {
  static const Matrix m = Matrix::two_by_two({0, 0}, {0, -1}, {0, 1}, {0, 0});
  return m;
}
const Matrix& pauli_z() {
  static const Matrix m = Matrix::two_by_two({1, 0}, {0, 0}, {0, 0}, {-1, 0});
  return m;
}
const Matrix& hadamard_gate() {
  static const double r = 1.0 / std::sqrt(2.0);
  static const Matrix m = Matrix::two_by_two({r, 0}, {r, 0}, {r, 0}, {-r, 0});
  return m;
}
const Matrix& identity2() {
  static const Matrix m = Matrix::identity(2);
  return m;
}

//=========================================================================
// kron / embed
//=========================================================================

Matrix kron(const Matrix& a, const Matrix& b) {
  const std::size_t da = a.dim(), db = b.dim();
  Matrix r(da * db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j) {
      const Complex v = a.at(i, j);
      if (v == Complex{0, 0}) continue;
      for (std::size_t k = 0; k < db; ++k)
        for (std::size_t l = 0; l < db; ++l) r.at(i * db + k, j * db + l) = v * b.at(k, l);
    }
  return r;
}

StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector r(a.dim() * b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) r[i * b.dim() + j] = a[i] * b[j];
  return r;
}

Matrix embed(const Matrix& op, const std::vector<int>& sites, int n_qubits) {
  if (sites.empty() || sites.size() > 2)
    throw std::invalid_argument("embed supports one or two sites");
  const std::size_t expected = sites.size() == 1 ? 2 : 4;
  if (op.dim() != expected)
    throw std::invalid_argument("embed: operator dimension does not match site count");
  for (int s : sites)
    if (s < 0 || s >= n_qubits) throw std::invalid_argument("embed: site index out of range");
  if (sites.size() == 2 && sites[0] == sites[1])
    throw std::invalid_argument("embed: duplicate site index");

  const std::size_t dim = std::size_t{1} << n_qubits;
  // bit of qubit s within a basis index (qubit 0 = most significant)
  const auto bit = [n_qubits](std::size_t idx, int s) -> std::size_t {
    return (idx >> (n_qubits - 1 - s)) & 1u;
  };
  Matrix out(dim);
  for (std::size_t row = 0; row < dim; ++row) {
    std::size_t sub_row = 0;
    for (int s : sites) sub_row = (sub_row << 1) | bit(row, s);
    for (std::size_t sub_col = 0; sub_col < op.dim(); ++sub_col) {
      const Complex v = op.at(sub_row, sub_col);
      if (v == Complex{0, 0}) continue;
      std::size_t col = row;
      for (std::size_t si = 0; si < sites.size(); ++si) {
        const int s = sites[si];
        const std::size_t b = (sub_col >> (sites.size() - 1 - si)) & 1u;
        const std::size_t mask = std::size_t{1} << (n_qubits - 1 - s);
        col = (col & ~mask) | (b ? mask : 0u);
      }
      out.at(row, col) = v;
    }
  }
  return out;
}

//=========================================================================
// eigh: cyclic complex Jacobi
//=========================================================================

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a.at(i, j));
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition eigh(const Matrix& op) {
  if (!op.is_hermitian(kHermitianTol))
    throw std::invalid_argument("eigh requires a Hermitian matrix");
  const std::size_t d = op.dim();

  Matrix a = op;
  // Symmetrize exactly so rounding in the input cannot bias the sweeps.
  for (std::size_t i = 0; i < d; ++i) {
    a.at(i, i) = Complex{a.at(i, i).real(), 0};
    for (std::size_t j = i + 1; j < d; ++j) {
      const Complex m = (a.at(i, j) + std::conj(a.at(j, i))) * 0.5;
      a.at(i, j) = m;
      a.at(j, i) = std::conj(m);
    }
  }

  Matrix v = Matrix::identity(d);
  const double scale = std::max(1.0, a.frobenius_norm());
  const double stop = 1e-14 * scale;
  const int max_sweeps = 100;

  int sweep = 0;
  while (off_diagonal_norm(a) > stop) {
    if (++sweep > max_sweeps)
      throw std::runtime_error("eigh: Jacobi sweeps did not converge (ill-conditioned input)");
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const Complex apq = a.at(p, q);
        const double m = std::abs(apq);
        if (m <= 1e-300) continue;
        const Complex phase = apq / m;  // e^{i arg}
        const double app = a.at(p, p).real();
        const double aqq = a.at(q, q).real();
        const double tau = (aqq - app) / (2.0 * m);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J differs from identity on rows/cols {p,q}:
        //   J[p][p]=c, J[p][q]=s*phase, J[q][p]=-s*conj(phase), J[q][q]=c
        // A <- J^dagger A J  ;  V <- V J
        for (std::size_t i = 0; i < d; ++i) {  // column update A <- A J
          const Complex aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * std::conj(phase) * aiq;
          a.at(i, q) = s * phase * aip + c * aiq;
        }
        for (std::size_t j = 0; j < d; ++j) {  // row update A <- J^dagger A
          const Complex apj = a.at(p, j), aqj = a.at(q, j);
          a.at(p, j) = c * apj - s * phase * aqj;
          a.at(q, j) = s * std::conj(phase) * apj + c * aqj;
        }
        for (std::size_t i = 0; i < d; ++i) {  // V <- V J
          const Complex vip = v.at(i, p), viq = v.at(i, q);
          v.at(i, p) = c * vip - s * std::conj(phase) * viq;
          v.at(i, q) = s * phase * vip + c * viq;
        }
        a.at(p, q) = Complex{0, 0};
        a.at(q, p) = Complex{0, 0};
      }
    }
  }

  // Sort ascending, stable in original column order.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a.at(x, x).real() < a.at(y, y).real();
  });

  EigenDecomposition ed;
  ed.eigenvalues.resize(d);
  ed.eigenvectors = Matrix(d);
  for (std::size_t k = 0; k < d; ++k) {
    ed.eigenvalues[k] = a.at(order[k], order[k]).real();
    for (std::size_t i = 0; i < d; ++i) ed.eigenvectors.at(i, k) = v.at(i, order[k]);
  }

  // Deterministic handling of degenerate clusters: Gram-Schmidt in index
  // order, then fix each column's phase by its largest entry.
  std::size_t start = 0;
  while (start < d) {
    std::size_t end = start + 1;
    while (end < d && ed.eigenvalues[end] - ed.eigenvalues[end - 1] < kDegenerateGapTol) ++end;
    for (std::size_t k = start; k < end; ++k) {
      for (std::size_t j = start; j < k; ++j) {
        Complex proj{0, 0};
        for (std::size_t i = 0; i < d; ++i)
          proj += std::conj(ed.eigenvectors.at(i, j)) * ed.eigenvectors.at(i, k);
        for (std::size_t i = 0; i < d; ++i)
          ed.eigenvectors.at(i, k) -= proj * ed.eigenvectors.at(i, j);
      }
      double nrm = 0;
      for (std::size_t i = 0; i < d; ++i) nrm += std::norm(ed.eigenvectors.at(i, k));
      nrm = std::sqrt(nrm);
      for (std::size_t i = 0; i < d; ++i) ed.eigenvectors.at(i, k) = ed.eigenvectors.at(i, k) / nrm;
    }
    start = end;
  }
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t imax = 0;
    double best = -1;
    for (std::size_t i = 0; i < d; ++i) {
      const double m = std::abs(ed.eigenvectors.at(i, k));
      if (m > best + 1e-15) {
        best = m;
        imax = i;
      }
    }
    const Complex top = ed.eigenvectors.at(imax, k);
    if (std::abs(top) > 0) {
      const Complex ph = std::conj(top) / std::abs(top);
      for (std::size_t i = 0; i < d; ++i) ed.eigenvectors.at(i, k) *= ph;
    }
  }
  return ed;
}

//=========================================================================
// expectation / evolve / partial trace / entropy
//=========================================================================

double expectation(const StateVector& psi, const Matrix& op) {
  if (psi.dim() != op.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  const Complex val = StateVector::inner(psi, apply(op, psi));
  if (std::abs(val.imag()) > kTraceTol)
    throw std::domain_error("expectation has a non-negligible imaginary part");
  return val.real();
}

double expectation(const DensityMatrix& rho, const Matrix& op) {
  if (rho.dim() != op.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  Complex val{0, 0};
  for (std::size_t i = 0; i < op.dim(); ++i)
    for (std::size_t j = 0; j < op.dim(); ++j) val += rho.mat().at(i, j) * op.at(j, i);
  if (std::abs(val.imag()) > kTraceTol)
    throw std::domain_error("expectation has a non-negligible imaginary part");
  return val.real();
}

Matrix evolve(const Matrix& hermitian, double t) {
  const EigenDecomposition ed = eigh(hermitian);
  const std::size_t d = hermitian.dim();
  Matrix u(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Complex ph = std::exp(Complex{0, -ed.eigenvalues[k] * t});
    for (std::size_t i = 0; i < d; ++i) {
      const Complex vik = ed.eigenvectors.at(i, k) * ph;
      for (std::size_t j = 0; j < d; ++j)
        u.at(i, j) += vik * std::conj(ed.eigenvectors.at(j, k));
    }
  }
  return u;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep,
                            int n_qubits) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  std::vector<int> kept = keep;
  std::sort(kept.begin(), kept.end());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] < 0 || kept[i] >= n_qubits)
      throw std::invalid_argument("partial_trace: site out of range");
    if (i > 0 && kept[i] == kept[i - 1])
      throw std::invalid_argument("partial_trace: duplicate site");
  }
  std::vector<int> traced;
  for (int s = 0; s < n_qubits; ++s)
    if (std::find(kept.begin(), kept.end(), s) == kept.end()) traced.push_back(s);

  const std::size_t dk = std::size_t{1} << kept.size();
  const std::size_t dt = std::size_t{1} << traced.size();
  const auto full_index = [&](std::size_t ik, std::size_t it) {
    std::size_t idx = 0;
    for (std::size_t b = 0; b < kept.size(); ++b) {
      const std::size_t bit = (ik >> (kept.size() - 1 - b)) & 1u;
      idx |= bit << (n_qubits - 1 - kept[b]);
    }
    for (std::size_t b = 0; b < traced.size(); ++b) {
      const std::size_t bit = (it >> (traced.size() - 1 - b)) & 1u;
      idx |= bit << (n_qubits - 1 - traced[b]);
    }
    return idx;
  };

  Matrix out(dk);
  for (std::size_t i = 0; i < dk; ++i)
    for (std::size_t j = 0; j < dk; ++j) {
      Complex s{0, 0};
      for (std::size_t t = 0; t < dt; ++t)
        s += rho.mat().at(full_index(i, t), full_index(j, t));
      out.at(i, j) = s;
    }
  return DensityMatrix::unchecked(std::move(out));
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const EigenDecomposition ed = eigh(rho.mat());
  double s = 0;
  for (double lam : ed.eigenvalues) {
    if (lam < -1e-8) throw std::domain_error("entropy of an invalid state (negative eigenvalue)");
    if (lam > 1e-15) s -= lam * std::log(lam);
  }
  return s;
}

}  // namespace qet
