#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qet/linalg.hpp"

namespace qet::model {

enum class Variant { Minimal2, Extended3 };

struct ModelParams {
  double h = 1.0;  // transverse field strength, > 0
  double k = 1.0;  // coupling strength, > 0
  Variant variant = Variant::Minimal2;
};

// A local term h*Z_site + offset or a coupling coeff*X_i*X_j + offset.
struct LocalTerm {
  int site;
  Matrix op;      // full-dimension operator including its offset
  double offset;  // additive constant that zeroes the ground-state mean
};

struct CouplingTerm {
  std::pair<int, int> sites;
  Matrix op;
  double offset;
};

// Immutable after build_*; every invariant below holds on construction:
//   <g|H_tot|g> = 0, <g|H_n|g> = 0, <g|V_ij|g> = 0 (within 1e-9),
//   H_tot = sum of terms elementwise (within 1e-12),
//   min eigenvalue of H_tot = 0 (within 1e-9).
struct ModelInstance {
  ModelParams params;
  int n_qubits;
  std::vector<LocalTerm> locals;
  std::vector<CouplingTerm> couplings;
  Matrix total;
  StateVector ground;
  double ground_energy;  // of H_tot (zero by construction)

  const LocalTerm& local(int site) const;
  const CouplingTerm& coupling(int i, int j) const;
};

// Raised when the traceless Hamiltonian's two lowest eigenvalues are
// closer than 1e-10 and no unique ground state can be selected.
struct DegenerateGroundState : std::runtime_error {
  DegenerateGroundState(StateVector a, StateVector b, double gap)
      : std::runtime_error("degenerate ground space (gap " + std::to_string(gap) + ")"),
        candidate_a(std::move(a)),
        candidate_b(std::move(b)),
        gap(gap) {}
  StateVector candidate_a;
  StateVector candidate_b;
  double gap;
};

enum class SignConvention { PlusEta, MinusEta };

// xi = <g|Y_r H Y_r|g>, eta = <g|X_s i[H, Y_r]|g>; phi in [0, pi/2] with
// cos(2 phi) = xi / sqrt(xi^2 + eta^2). sign_convention records which
// sin(2 phi) sign (the mu-coupling direction of the feedback rotation)
// minimizes the receiver energy.
struct ProtocolAngles {
  double xi;
  double eta;
  double phi;
  SignConvention sign_convention;
};

// Closed-form coefficient set for the three-qubit model; diagnostic output
// only, never used to build operators. The printed M1 formula involves an
// auxiliary coefficient that the defining material leaves open; it is
// evaluated with aux = h here (see closed_form_coefficients).
struct ClosedFormCoefficients {
  double K;   // sqrt(h^2 + h k + k^2)
  double L;   // local offset candidate
  double M1;
  double M2;
  double M3;
  double x;        // solution of the zero-mean condition for site 0
  double residual; // |condition(x)| at the stored root
  bool available;  // false when the root search failed to bracket
};

// Minimal two-qubit model:  H_n = h Z_n + h^2/sqrt(h^2+k^2)  (n = 0, 1),
// V = 2k X0 X1 + 2k^2/sqrt(h^2+k^2).
ModelInstance build_minimal(const ModelParams& params);

// Extended three-qubit model: traceless parts h Z_n (n = 0,1,2) and
// k X_i X_j for all pairs; offsets computed numerically from the
// eigensolver ground state (offsets do not move eigenvectors).
ModelInstance build_extended(const ModelParams& params);

// (1/sqrt2) [ sqrt(1 - h/sqrt(h^2+k^2)) |00> - sqrt(1 + h/sqrt(h^2+k^2)) |11> ]
StateVector analytic_ground_minimal(const ModelParams& params);

// Diagnostic evaluation of the printed closed forms; `aux` substitutes the
// undefined coefficient in M1's formula (default h).
ClosedFormCoefficients closed_form_coefficients(const ModelParams& params,
                                                std::optional<double> aux = std::nullopt);

ProtocolAngles compute_angles(const ModelInstance& m, int sender_site, int receiver_site);

// Sum of all term offsets (equals minus the traceless ground energy).
double total_offset(const ModelInstance& m);

}  // namespace qet::model
