#include "qet/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include "qet/rng.hpp"

namespace qet::circuit {

//=========================================================================
// Gate constructors
//=========================================================================

Gate Gate::pauli_x(int q) {
  Gate g;
  g.kind = GateKind::PauliX;
  g.targets = {q};
  return g;
}

Gate Gate::hadamard(int q) {
  Gate g;
  g.kind = GateKind::Hadamard;
  g.targets = {q};
  return g;
}

Gate Gate::rot_y(int q, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("rotation angle is not finite");
  Gate g;
  g.kind = GateKind::RotY;
  g.targets = {q};
  g.angle = angle;
  return g;
}

Gate Gate::rot_z(int q, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("rotation angle is not finite");
  Gate g;
  g.kind = GateKind::RotZ;
  g.targets = {q};
  g.angle = angle;
  return g;
}

Gate Gate::cnot(int control, int target) {
  if (control == target) throw std::invalid_argument("cnot control equals target");
  Gate g;
  g.kind = GateKind::Cnot;
  g.targets = {target};
  g.controls = {control};
  return g;
}

Gate Gate::controlled_u(int control, int target, const Matrix& u2) {
  if (control == target) throw std::invalid_argument("controlled-U control equals target");
  if (u2.dim() != 2) throw std::invalid_argument("controlled-U payload must be 2x2");
  Gate g;
  g.kind = GateKind::ControlledU;
  g.targets = {target};
  g.controls = {control};
  g.unitary = {u2.at(0, 0), u2.at(0, 1), u2.at(1, 0), u2.at(1, 1)};
  return g;
}

Gate Gate::measure_z(int q, int bit) {
  Gate g;
  g.kind = GateKind::MeasureZ;
  g.targets = {q};
  g.classical_bit = bit;
  return g;
}

Gate Gate::classically_controlled(Gate inner_gate, int bit) {
  if (inner_gate.kind == GateKind::MeasureZ ||
      inner_gate.kind == GateKind::ClassicallyControlled)
    throw std::invalid_argument("classically controlled payload must be a unitary gate");
  Gate g;
  g.kind = GateKind::ClassicallyControlled;
  g.classical_bit = bit;
  g.targets = inner_gate.targets;
  g.controls = inner_gate.controls;
  g.inner = std::make_shared<Gate>(std::move(inner_gate));
  return g;
}

//=========================================================================
// Validation / serialization
//=========================================================================

void Circuit::validate() const {
  std::vector<bool> bit_written(n_classical_bits, false);
  std::vector<bool> qubit_measured(n_qubits, false);
  for (const Gate& g : gates) {
    for (int q : g.targets)
      if (q < 0 || q >= n_qubits) throw std::invalid_argument("gate target out of range");
    for (int q : g.controls)
      if (q < 0 || q >= n_qubits) throw std::invalid_argument("gate control out of range");
    for (int t : g.targets)
      for (int c : g.controls)
        if (t == c) throw std::invalid_argument("gate targets and controls overlap");

    if (g.kind == GateKind::MeasureZ) {
      if (g.classical_bit < 0 || g.classical_bit >= n_classical_bits)
        throw std::invalid_argument("measurement bit out of range");
      bit_written[g.classical_bit] = true;
      qubit_measured[g.targets[0]] = true;
      continue;
    }
    if (g.kind == GateKind::ClassicallyControlled) {
      if (g.classical_bit < 0 || g.classical_bit >= n_classical_bits)
        throw std::invalid_argument("classical control bit out of range");
      if (!bit_written[g.classical_bit])
        throw std::invalid_argument("classical bit used before written");
    }
    for (int q : g.targets) {
      if (qubit_measured[q] && !mid_measurement)
        throw std::invalid_argument("unitary gate reuses a measured qubit");
    }
  }
}

std::vector<int> Circuit::gates_per_qubit() const {
  std::vector<int> depth(n_qubits, 0);
  for (const Gate& g : gates) {
    for (int q : g.targets) ++depth[q];
    for (int q : g.controls) ++depth[q];
  }
  return depth;
}

namespace {

std::string hexf(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void gate_text(const Gate& g, std::ostringstream& out) {
  switch (g.kind) {
    case GateKind::PauliX: out << "X t" << g.targets[0]; break;
    case GateKind::Hadamard: out << "H t" << g.targets[0]; break;
    case GateKind::RotY: out << "RY t" << g.targets[0] << " " << hexf(g.angle); break;
    case GateKind::RotZ: out << "RZ t" << g.targets[0] << " " << hexf(g.angle); break;
    case GateKind::Cnot: out << "CNOT t" << g.targets[0] << " c" << g.controls[0]; break;
    case GateKind::ControlledU:
      out << "CU t" << g.targets[0] << " c" << g.controls[0];
      for (const Complex& u : g.unitary) out << " " << hexf(u.real()) << " " << hexf(u.imag());
      break;
    case GateKind::MeasureZ:
      out << "M t" << g.targets[0] << " b" << g.classical_bit;
      break;
    case GateKind::ClassicallyControlled:
      out << "CC b" << g.classical_bit << " ";
      gate_text(*g.inner, out);
      break;
  }
}

}  // namespace

std::string to_text(const Circuit& c) {
  std::ostringstream out;
  out << "qubits " << c.n_qubits << " bits " << c.n_classical_bits << "\n";
  for (const Gate& g : c.gates) {
    gate_text(g, out);
    out << "\n";
  }
  return out.str();
}

std::uint64_t circuit_hash(const Circuit& c) {
  const std::string text = to_text(c);
  return fnv1a(text.data(), text.size());
}

//=========================================================================
// Exact simulation
//=========================================================================

namespace {

struct SimBranch {
  std::vector<Complex> amps;  // unnormalized; squared norm = branch probability
  std::vector<int> bits;
};

Matrix gate_matrix_2x2(const Gate& g) {
  switch (g.kind) {
    case GateKind::PauliX: return pauli_x();
    case GateKind::Hadamard: return hadamard_gate();
    case GateKind::RotY: {
      const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
      return Matrix::two_by_two({c, 0}, {-s, 0}, {s, 0}, {c, 0});
    }
    case GateKind::RotZ: {
      return Matrix::two_by_two(std::exp(Complex{0, -g.angle / 2}), {0, 0}, {0, 0},
                                std::exp(Complex{0, g.angle / 2}));
    }
    case GateKind::ControlledU:
      return Matrix::two_by_two(g.unitary[0], g.unitary[1], g.unitary[2], g.unitary[3]);
    default:
      throw std::logic_error("gate has no 2x2 matrix");
  }
}

// Applies a 2x2 unitary to `target`, restricted to components where every
// control qubit is 1. Qubit 0 is the most significant index bit.
void apply_2x2(std::vector<Complex>& amps, int n_qubits, const Matrix& u, int target,
               const std::vector<int>& controls) {
  const std::size_t dim = amps.size();
  const std::size_t tmask = std::size_t{1} << (n_qubits - 1 - target);
  std::size_t cmask = 0;
  for (int c : controls) cmask |= std::size_t{1} << (n_qubits - 1 - c);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & tmask) continue;              // visit each pair once, via its target=0 member
    if ((i & cmask) != cmask) continue;   // all controls must be 1
    const std::size_t j = i | tmask;
    const Complex a0 = amps[i], a1 = amps[j];
    amps[i] = u.at(0, 0) * a0 + u.at(0, 1) * a1;
    amps[j] = u.at(1, 0) * a0 + u.at(1, 1) * a1;
  }
}

void apply_gate(SimBranch& b, const Gate& g, int n_qubits) {
  switch (g.kind) {
    case GateKind::PauliX:
    case GateKind::Hadamard:
    case GateKind::RotY:
    case GateKind::RotZ:
    case GateKind::ControlledU:
      apply_2x2(b.amps, n_qubits, gate_matrix_2x2(g), g.targets[0], g.controls);
      return;
    case GateKind::Cnot:
      apply_2x2(b.amps, n_qubits, pauli_x(), g.targets[0], g.controls);
      return;
    case GateKind::ClassicallyControlled:
      if (b.bits[g.classical_bit] == 1) apply_gate(b, *g.inner, n_qubits);
      return;
    case GateKind::MeasureZ:
      throw std::logic_error("measurement handled by the branching loop");
  }
}

double branch_prob(const SimBranch& b) {
  double s = 0;
  for (const Complex& a : b.amps) s += std::norm(a);
  return s;
}

}  // namespace

ExactResult simulate_exact(const Circuit& c) {
  c.validate();
  const std::size_t dim = std::size_t{1} << c.n_qubits;

  std::vector<SimBranch> branches(1);
  branches[0].amps.assign(dim, Complex{0, 0});
  branches[0].amps[0] = Complex{1, 0};
  branches[0].bits.assign(c.n_classical_bits, -1);

  for (const Gate& g : c.gates) {
    if (g.kind != GateKind::MeasureZ) {
      for (SimBranch& b : branches) apply_gate(b, g, c.n_qubits);
      continue;
    }
    const int q = g.targets[0];
    const std::size_t qmask = std::size_t{1} << (c.n_qubits - 1 - q);
    std::vector<SimBranch> next;
    next.reserve(branches.size() * 2);
    for (SimBranch& b : branches) {
      for (int outcome : {0, 1}) {
        SimBranch nb;
        nb.amps.assign(dim, Complex{0, 0});
        for (std::size_t i = 0; i < dim; ++i)
          if (((i & qmask) != 0) == (outcome == 1)) nb.amps[i] = b.amps[i];
        nb.bits = b.bits;
        nb.bits[g.classical_bit] = outcome;
        if (branch_prob(nb) > 1e-300) next.push_back(std::move(nb));
      }
    }
    branches = std::move(next);
  }

  ExactResult res;
  res.distribution.assign(std::size_t{1} << c.n_classical_bits, 0.0);
  Matrix rho(dim);
  for (const SimBranch& b : branches) {
    std::size_t pattern = 0;
    for (int bit = 0; bit < c.n_classical_bits; ++bit) {
      if (b.bits[bit] < 0)
        throw std::invalid_argument("classical bit never written by the circuit");
      pattern |= std::size_t{b.bits[bit] == 1} << (c.n_classical_bits - 1 - bit);
    }
    res.distribution[pattern] += branch_prob(b);
    StateVector psi(b.amps);
    rho += outer(psi);
  }
  res.final_density = DensityMatrix::unchecked(std::move(rho));
  return res;
}

//=========================================================================
// Deferred measurement rewrite
//=========================================================================

Circuit defer_measurements(const Circuit& c) {
  c.validate();
  Circuit out(c.n_qubits, c.n_classical_bits);

  std::vector<int> bit_to_qubit(c.n_classical_bits, -1);
  std::vector<bool> measured(c.n_qubits, false);

  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::MeasureZ) {
      bit_to_qubit[g.classical_bit] = g.targets[0];
      measured[g.targets[0]] = true;
      continue;  // re-appended at the end
    }
    if (g.kind == GateKind::ClassicallyControlled) {
      const int src = bit_to_qubit[g.classical_bit];
      if (src < 0) throw std::invalid_argument("classical bit used before written");
      const Gate& in = *g.inner;
      if (!in.controls.empty())
        throw std::invalid_argument("unsupported control topology in deferral");
      if (in.targets[0] == src)
        throw std::invalid_argument("classically controlled gate targets its own source qubit");
      out.append(Gate::controlled_u(src, in.targets[0], gate_matrix_2x2(in)));
      continue;
    }
    for (int q : g.targets)
      if (measured[q])
        throw std::invalid_argument("unitary gate on a measured qubit cannot be deferred");
    for (int q : g.controls)
      if (measured[q])
        throw std::invalid_argument("quantum control on a measured qubit cannot be deferred");
    out.append(g);
  }

  for (int bit = 0; bit < c.n_classical_bits; ++bit)
    if (bit_to_qubit[bit] >= 0) out.append(Gate::measure_z(bit_to_qubit[bit], bit));
  out.mid_measurement = false;
  out.validate();
  return out;
}

//=========================================================================
// Ground-state preparation
//=========================================================================

namespace {

Circuit prep_template(double t1, double t2, bool with_extra, double t3) {
  Circuit c(3, 0);
  c.append(Gate::pauli_x(0));
  c.append(Gate::rot_y(0, t1));
  c.append(Gate::cnot(0, 1));
  c.append(Gate::cnot(0, 2));
  c.append(Gate::pauli_x(0));
  c.append(Gate::rot_y(1, t2));
  if (with_extra) {
    // Inserted before the last CNOT so the output support stays inside the
    // odd-parity family while adding the missing degree of freedom.
    const double cth = std::cos(t3 / 2), sth = std::sin(t3 / 2);
    c.append(Gate::controlled_u(
        0, 1, Matrix::two_by_two({cth, 0}, {-sth, 0}, {sth, 0}, {cth, 0})));
  }
  c.append(Gate::cnot(1, 2));
  return c;
}

StateVector run_prep(const Circuit& c) {
  SimBranch b;
  b.amps.assign(std::size_t{1} << c.n_qubits, Complex{0, 0});
  b.amps[0] = Complex{1, 0};
  b.bits.assign(1, -1);
  for (const Gate& g : c.gates) apply_gate(b, g, c.n_qubits);
  return StateVector(b.amps);
}

double prep_fidelity(const StateVector& target, const Circuit& c) {
  return std::norm(StateVector::inner(target, run_prep(c)));
}

// Nelder-Mead on 1 - fidelity; deterministic, derivative-free.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, double step, int max_iter) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex{x0};
  for (std::size_t i = 0; i < n; ++i) {
    auto p = x0;
    p[i] += step;
    simplex.push_back(p);
  }
  std::vector<double> fx(simplex.size());
  for (std::size_t i = 0; i < simplex.size(); ++i) fx[i] = f(simplex[i]);

  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> order(simplex.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      f2.push_back(fx[i]);
    }
    simplex = std::move(s2);
    fx = std::move(f2);
    if (fx.back() - fx.front() < 1e-15) break;

    std::vector<double> centroid(n, 0);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / double(n);

    const auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t d = 0; d < n; ++d)
        p[d] = centroid[d] + t * (simplex.back()[d] - centroid[d]);
      return p;
    };
    auto refl = blend(-1.0);
    double fr = f(refl);
    if (fr < fx.front()) {
      auto exp_p = blend(-2.0);
      double fe = f(exp_p);
      if (fe < fr) {
        simplex.back() = exp_p;
        fx.back() = fe;
      } else {
        simplex.back() = refl;
        fx.back() = fr;
      }
    } else if (fr < fx[fx.size() - 2]) {
      simplex.back() = refl;
      fx.back() = fr;
    } else {
      auto con = blend(0.5);
      double fc = f(con);
      if (fc < fx.back()) {
        simplex.back() = con;
        fx.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          for (std::size_t d = 0; d < n; ++d)
            simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
          fx[i] = f(simplex[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < simplex.size(); ++i)
    if (fx[i] < fx[best]) best = i;
  return simplex[best];
}

}  // namespace

PreparedCircuit prepare_ground_circuit(const StateVector& target) {
  if (target.dim() != 8) throw std::invalid_argument("prepare_ground_circuit expects 3 qubits");
  if (std::abs(target.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("target state must be normalized");
  for (std::size_t i : {0u, 3u, 5u, 6u})
    if (std::abs(target[i]) > 1e-9)
      throw std::invalid_argument("target outside the odd-parity support pattern");

  // Rotate the global phase so the amplitudes are real.
  StateVector t = target;
  std::size_t imax = 1;
  for (std::size_t i : {1u, 2u, 4u, 7u})
    if (std::abs(t[i]) > std::abs(t[imax])) imax = i;
  const Complex ph = std::conj(t[imax]) / std::abs(t[imax]);
  for (std::size_t i = 0; i < 8; ++i) t[i] *= ph;
  for (std::size_t i : {1u, 2u, 4u, 7u})
    if (std::abs(t[i].imag()) > 1e-9)
      throw std::invalid_argument("target amplitudes must be real up to a global phase");

  const double p = t[1].real(), q = t[2].real(), r = t[4].real(), s = t[7].real();
  const double A = std::hypot(p, q), B = std::hypot(r, s);

  // Closed-form seed angles; the template reaches
  //   (-cos(t1/2) sin(t2/2), cos(t1/2) cos(t2/2),
  //    -sin(t1/2) cos(t23/2), -sin(t1/2) sin(t23/2))
  // at (001, 010, 100, 111), with t23 = t2 + t3.
  const double t1 = 2.0 * std::atan2(B, A);
  const double t2 = A > 1e-12 ? 2.0 * std::atan2(-p, q) : 0.0;
  const double t23 = B > 1e-12 ? 2.0 * std::atan2(-s, -r) : 0.0;

  const auto fit = [&](bool with_extra, std::vector<double> seed) {
    const auto objective = [&](const std::vector<double>& x) {
      return 1.0 - prep_fidelity(t, prep_template(x[0], x[1], with_extra,
                                                  with_extra ? x[2] : 0.0));
    };
    auto best = seed;
    double best_f = objective(best);
    for (double step : {0.7, 0.11}) {
      auto cand = nelder_mead(objective, best, step, 400);
      if (objective(cand) < best_f) {
        best = cand;
        best_f = objective(best);
      }
    }
    return best;
  };

  // Two-angle template first.
  auto two = fit(false, {t1, t2});
  Circuit c2 = prep_template(two[0], two[1], false, 0.0);
  double f2 = prep_fidelity(t, c2);
  if (f2 >= 1.0 - 1e-9) {
    return PreparedCircuit{std::move(c2), f2, {two[0], two[1]}, false};
  }

  auto three = fit(true, {t1, t2, t23 - t2});
  Circuit c3 = prep_template(three[0], three[1], true, three[2]);
  double f3 = prep_fidelity(t, c3);
  if (f3 < 1.0 - 1e-9)
    throw std::runtime_error("ground-state preparation cannot reach the target family");
  return PreparedCircuit{std::move(c3), f3, three, true};
}

PreparedCircuit prepare_minimal_ground_circuit(const StateVector& target) {
  if (target.dim() != 4) throw std::invalid_argument("expected a 2-qubit target");
  if (std::abs(target[1]) > 1e-9 || std::abs(target[2]) > 1e-9)
    throw std::invalid_argument("target outside the {00, 11} support pattern");
  StateVector t = target;
  const std::size_t imax = std::abs(t[0]) > std::abs(t[3]) ? 0 : 3;
  const Complex ph = std::conj(t[imax]) / std::abs(t[imax]);
  t[0] *= ph;
  t[3] *= ph;
  const double a = t[0].real(), b = t[3].real();
  const double theta = 2.0 * std::atan2(b, a);
  Circuit c(2, 0);
  c.append(Gate::rot_y(0, theta));
  c.append(Gate::cnot(0, 1));
  SimBranch sb;
  sb.amps.assign(4, Complex{0, 0});
  sb.amps[0] = Complex{1, 0};
  sb.bits.assign(1, -1);
  for (const Gate& g : c.gates) apply_gate(sb, g, 2);
  const double fid = std::norm(StateVector::inner(t, StateVector(sb.amps)));
  return PreparedCircuit{std::move(c), fid, {theta}, false};
}

//=========================================================================
// Estimators
//=========================================================================

namespace {

int bit_of(const std::string& key, int site) {
  if (site < 0 || site >= static_cast<int>(key.size()))
    throw std::invalid_argument("estimator site outside the bit-string width");
  return key[site] == '1' ? 1 : 0;
}

double term_sign(const std::string& key, const PauliTerm& term) {
  double s = 1;
  for (const auto& [site, _] : term.paulis) s *= 1.0 - 2.0 * bit_of(key, site);
  return s;
}

}  // namespace

std::string ObservableSpec::basis_key(int width) const {
  std::string key(width, 'Z');
  for (const auto& term : terms)
    for (const auto& [site, basis] : term.paulis) {
      if (site < 0 || site >= width) throw std::invalid_argument("term site out of range");
      key[site] = basis;
    }
  return key;
}

double estimate_z(const ShotHistogram& hist, int site) {
  if (hist.shots == 0) throw std::invalid_argument("empty histogram");
  double acc = 0;
  for (const auto& [key, count] : hist.counts)
    acc += (1.0 - 2.0 * bit_of(key, site)) * double(count);
  return acc / double(hist.shots);
}

double estimate_xx(const ShotHistogram& hist, int i, int j) {
  if (hist.shots == 0) throw std::invalid_argument("empty histogram");
  double acc = 0;
  for (const auto& [key, count] : hist.counts)
    acc += (1.0 - 2.0 * bit_of(key, i)) * (1.0 - 2.0 * bit_of(key, j)) * double(count);
  return acc / double(hist.shots);
}

double estimate_observable(const ShotHistogram& hist, const ObservableSpec& spec) {
  if (hist.shots == 0) throw std::invalid_argument("empty histogram");
  double acc = spec.offset;
  for (const auto& term : spec.terms) {
    double t = 0;
    for (const auto& [key, count] : hist.counts) t += term_sign(key, term) * double(count);
    acc += term.coeff * t / double(hist.shots);
  }
  return acc;
}

double estimate_observable(const std::map<std::string, ShotHistogram>& by_basis,
                           const ObservableSpec& spec) {
  if (by_basis.empty() && !spec.terms.empty())
    throw std::invalid_argument("missing histogram for term basis");
  double acc = spec.offset;
  for (const auto& term : spec.terms) {
    ObservableSpec single{spec.name, {term}, 0.0};
    const auto it = by_basis.find(single.basis_key(by_basis.begin()->second.width));
    if (it == by_basis.end())
      throw std::invalid_argument("missing histogram for term basis");
    acc += estimate_observable(it->second, single);
  }
  return acc;
}

double estimate_observable_exact(const std::vector<double>& distribution, int width,
                                 const ObservableSpec& spec) {
  double acc = spec.offset;
  for (const auto& term : spec.terms) {
    double t = 0;
    for (std::size_t pattern = 0; pattern < distribution.size(); ++pattern) {
      if (distribution[pattern] == 0) continue;
      std::string key(width, '0');
      for (int b = 0; b < width; ++b)
        if (pattern & (std::size_t{1} << (width - 1 - b))) key[b] = '1';
      t += term_sign(key, term) * distribution[pattern];
    }
    acc += term.coeff * t;
  }
  return acc;
}

double estimate_stderr(const ShotHistogram& hist, const ObservableSpec& spec) {
  if (hist.shots < 2) return 0.0;
  const auto per_shot = [&](const std::string& key) {
    double v = spec.offset;
    for (const auto& term : spec.terms) v += term.coeff * term_sign(key, term);
    return v;
  };
  double mean = 0;
  for (const auto& [key, count] : hist.counts) mean += per_shot(key) * double(count);
  mean /= double(hist.shots);
  double ss = 0;
  for (const auto& [key, count] : hist.counts) {
    const double d = per_shot(key) - mean;
    ss += d * d * double(count);
  }
  const double var = ss / double(hist.shots - 1);
  return std::sqrt(var / double(hist.shots));
}

//=========================================================================
// Protocol circuit synthesis
//=========================================================================

ProtocolCircuits build_protocol_circuits(const model::ModelInstance& m,
                                         protocol::ProtocolVariant variant, double phi,
                                         model::SignConvention sc) {
  using protocol::ProtocolVariant;
  const int n = m.n_qubits;
  const double sgn = sc == model::SignConvention::PlusEta ? 1.0 : -1.0;

  PreparedCircuit prep = variant == ProtocolVariant::Minimal
                             ? prepare_minimal_ground_circuit(m.ground)
                             : prepare_ground_circuit(m.ground);

  const std::vector<int> senders = protocol::sender_sites(variant);
  const std::vector<int> receivers = protocol::receiver_sites(variant);

  // Observable list per variant; every observable is one Pauli term plus
  // the model offset.
  std::vector<ObservableSpec> specs;
  const auto h_spec = [&](int site) {
    const auto& term = m.local(site);
    return ObservableSpec{"H" + std::to_string(site),
                          {{m.params.h, {{site, 'Z'}}}},
                          term.offset};
  };
  const auto v_spec = [&](int i, int j, const std::string& name) {
    const auto& term = m.coupling(i, j);
    const double coeff = variant == ProtocolVariant::Minimal ? 2.0 * m.params.k : m.params.k;
    return ObservableSpec{name, {{coeff, {{i, 'X'}, {j, 'X'}}}}, term.offset};
  };
  switch (variant) {
    case ProtocolVariant::Minimal:
      specs = {h_spec(1), v_spec(0, 1, "V")};
      break;
    case ProtocolVariant::Miso:
      specs = {h_spec(2), v_spec(0, 2, "V02"), v_spec(1, 2, "V12")};
      break;
    case ProtocolVariant::Simo:
      specs = {h_spec(1), h_spec(2), v_spec(0, 1, "V01"), v_spec(0, 2, "V02")};
      break;
  }

  ProtocolCircuits out;
  out.phi = phi;
  out.sign_convention = sc;
  out.prep_fidelity = prep.fidelity;

  for (const ObservableSpec& spec : specs) {
    Circuit c(n, n);
    c.mid_measurement = true;
    for (const Gate& g : prep.circuit.gates) c.append(g);

    // Sender X measurements: bit index = site index, mu = 1 - 2b.
    for (int s : senders) {
      c.append(Gate::hadamard(s));
      c.append(Gate::measure_z(s, s));
    }
    // Conditional feedback U(mu) = RY(2 sgn mu phi): an unconditional
    // RY(2 sgn phi) plus a bit-controlled RY(-4 sgn phi) per sender bit.
    for (int r : receivers) {
      for (int s : senders) {
        c.append(Gate::rot_y(r, 2.0 * sgn * phi));
        c.append(Gate::classically_controlled(Gate::rot_y(r, -4.0 * sgn * phi), s));
      }
    }
    // Basis change for X factors on qubits that were not already measured
    // in the X basis, then terminal measurement of the remaining qubits.
    const std::string basis = spec.basis_key(n);
    for (int q = 0; q < n; ++q) {
      const bool is_sender = std::find(senders.begin(), senders.end(), q) != senders.end();
      if (is_sender) continue;
      if (basis[q] == 'X') c.append(Gate::hadamard(q));
      c.append(Gate::measure_z(q, q));
    }
    c.validate();
    out.deferred[spec.name] = defer_measurements(c);
    out.mid[spec.name] = c;
    out.observables[spec.name] = spec;
  }
  return out;
}

}  // namespace qet::circuit
