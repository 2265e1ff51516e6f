#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qet/linalg.hpp"
#include "qet/model.hpp"
#include "qet/protocol.hpp"

namespace qet::circuit {

//=========================================================================
// Gate-level IR
//=========================================================================

enum class GateKind {
  PauliX,
  Hadamard,
  RotY,
  RotZ,
  Cnot,
  ControlledU,           // controlled 2x2 unitary
  MeasureZ,              // projective Z measurement into a classical bit
  ClassicallyControlled  // inner unitary applied when a classical bit is 1
};

struct Gate {
  GateKind kind;
  std::vector<int> targets;
  std::vector<int> controls;           // quantum controls
  double angle = 0;                    // RotY / RotZ
  std::array<Complex, 4> unitary{};    // ControlledU payload, row-major 2x2
  int classical_bit = -1;              // MeasureZ writes it; ClassicallyControlled reads it
  std::shared_ptr<const Gate> inner;   // ClassicallyControlled payload

  static Gate pauli_x(int q);
  static Gate hadamard(int q);
  static Gate rot_y(int q, double angle);
  static Gate rot_z(int q, double angle);
  static Gate cnot(int control, int target);
  static Gate controlled_u(int control, int target, const Matrix& u2);
  static Gate measure_z(int q, int bit);
  static Gate classically_controlled(Gate inner_gate, int bit);
};

struct Circuit {
  int n_qubits = 0;
  int n_classical_bits = 0;
  // Set when sender qubits are measured mid-circuit and their bits feed
  // later classically controlled gates.
  bool mid_measurement = false;
  std::vector<Gate> gates;

  Circuit() = default;
  Circuit(int nq, int nb) : n_qubits(nq), n_classical_bits(nb) {}
  void append(Gate g) { gates.push_back(std::move(g)); }

  // Classical bits written before read, indices in range, measured qubits
  // not reused by unitaries afterwards. Throws on violation.
  void validate() const;

  // Gate count touching each qubit line (a simple depth proxy).
  std::vector<int> gates_per_qubit() const;
};

// Line-based text form, one gate per line (KIND targets controls params);
// angles and matrix entries are hex floats so the form is exact.
std::string to_text(const Circuit& c);
std::uint64_t circuit_hash(const Circuit& c);

//=========================================================================
// Exact semantics
//=========================================================================

struct ExactResult {
  // Probability of each classical bit pattern; the pattern index uses bit 0
  // as the most significant position (pattern of "b0b1b2" = b0<<2|b1<<1|b2).
  std::vector<double> distribution;
  DensityMatrix final_density;  // ensemble over measurement branches
};

// Reference semantics for the sampler: mid-circuit measurements branch with
// exact probabilities, classically controlled gates apply per branch.
ExactResult simulate_exact(const Circuit& c);

//=========================================================================
// Shot sampling (OpenMP kernel + serial reference; identical output)
//=========================================================================

struct ShotHistogram {
  std::map<std::string, std::uint64_t> counts;  // bit strings, b0 first
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  int width = 0;
};

// i.i.d. draws from simulate_exact's distribution using a counter-based
// generator keyed by (seed, circuit hash, shot index). Identical
// (circuit, shots, seed) triples give identical histograms everywhere,
// regardless of thread count.
ShotHistogram sample(const Circuit& c, std::uint64_t shots, std::uint64_t seed);

// Single-threaded reference implementation kept for testing the kernel.
ShotHistogram sample_reference(const Circuit& c, std::uint64_t shots, std::uint64_t seed);

// Shared core: draw `shots` samples from a fixed distribution. Exposed for
// the benchmark target.
std::vector<std::uint64_t> sample_counts(const std::vector<double>& distribution,
                                         std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream, bool parallel);

//=========================================================================
// Deferred measurement rewrite
//=========================================================================

// Rewrites every ClassicallyControlled(U, bit) whose bit came from
// MeasureZ(q) into a coherent controlled-U with control q and moves all
// measurements to the end. The exact outcome distribution is unchanged.
Circuit defer_measurements(const Circuit& c);

//=========================================================================
// Ground-state preparation
//=========================================================================

struct PreparedCircuit {
  Circuit circuit;             // no measurements
  double fidelity;             // |<target|prepared>|^2
  std::vector<double> angles;  // solved rotation angles
  bool extended;               // true when the extra controlled rotation was needed
};

// Instantiates the fixed three-qubit template
//   X(0), RY(t1) on 0, CNOT 0->1, CNOT 0->2, X(0), RY(t2) on 1, CNOT 1->2
// for a normalized real target supported on {001, 010, 100, 111}. Angles
// are solved by derivative-free least squares on fidelity; when two angles
// cannot reach the target, one controlled-RY (control 0, target 1) is
// inserted before the final CNOT and the solve is repeated. Throws if the
// fidelity still misses 1 - 1e-9.
PreparedCircuit prepare_ground_circuit(const StateVector& target);

// Two-qubit analogue for states a|00> + b|11>: RY on qubit 0 plus CNOT.
PreparedCircuit prepare_minimal_ground_circuit(const StateVector& target);

//=========================================================================
// Observables and estimators
//=========================================================================

struct PauliTerm {
  double coeff;
  std::vector<std::pair<int, char>> paulis;  // (site, 'Z' | 'X')
};

struct ObservableSpec {
  std::string name;
  std::vector<PauliTerm> terms;
  double offset = 0;
  // Basis key ("ZXZ"-style, one char per qubit) the estimator expects the
  // histogram to have been measured in.
  std::string basis_key(int width) const;
};

// sum over bit strings of (1 - 2 b_site) count/shots
double estimate_z(const ShotHistogram& hist, int site);
// sum of (1 - 2 b_i)(1 - 2 b_j) count/shots, for a histogram taken under a
// Hadamard basis change on i and j
double estimate_xx(const ShotHistogram& hist, int i, int j);
// coeff * term estimates + offset; histograms are keyed by basis
double estimate_observable(const std::map<std::string, ShotHistogram>& by_basis,
                           const ObservableSpec& spec);
double estimate_observable(const ShotHistogram& hist, const ObservableSpec& spec);
// Same estimator evaluated on an exact distribution.
double estimate_observable_exact(const std::vector<double>& distribution, int width,
                                 const ObservableSpec& spec);

// Sample standard deviation of the per-shot estimator divided by
// sqrt(shots).
double estimate_stderr(const ShotHistogram& hist, const ObservableSpec& spec);

//=========================================================================
// Protocol circuit synthesis
//=========================================================================

struct ProtocolCircuits {
  std::map<std::string, Circuit> mid;       // mid-measurement form
  std::map<std::string, Circuit> deferred;  // rewritten form
  std::map<std::string, ObservableSpec> observables;
  double phi;
  model::SignConvention sign_convention;
  double prep_fidelity;
};

// One circuit per receiver observable (2 for the minimal model: H1, V;
// 3 for MISO: H2, V02, V12; 4 for SIMO: H1, H2, V01, V02): ground-state
// preparation, sender X measurements, classically controlled feedback,
// observable basis change, terminal measurement.
ProtocolCircuits build_protocol_circuits(const model::ModelInstance& m,
                                         protocol::ProtocolVariant variant, double phi,
                                         model::SignConvention sc);

}  // namespace qet::circuit
