#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "qet/linalg.hpp"
#include "qet/model.hpp"

namespace qet::protocol {

using model::ModelInstance;
using model::ProtocolAngles;
using model::SignConvention;

enum class ProtocolVariant { Minimal, Miso, Simo };

struct MeasurementOutcome {
  int mu;              // +1 or -1
  double probability;  // in [0, 1]; the two outcomes sum to 1
  StateVector post_state;  // normalized branch; zero vector when probability is 0
};

// Projective X measurement on `site`: branches P(mu)|state> / sqrt(p) with
// P(mu) = (1 + mu X_site)/2. Always returns both outcomes, mu = +1 first.
std::vector<MeasurementOutcome> measure_x(const StateVector& state, int site);

// Mean energy injected by the LAST sender in `senders`, measured in the
// listed order on the ground state: Tr[rho_M H_tot] minus the energy
// already deposited by the earlier senders. The overload with
// `receiver_sites` rejects sender lists that touch a receiver.
double deposit_energy(const ModelInstance& m, const std::vector<int>& senders);
double deposit_energy(const ModelInstance& m, const std::vector<int>& senders,
                      const std::vector<int>& receiver_sites);

// cos(phi) I  -  i s mu sin(phi) Y_site  with s = +1 (PlusEta) or -1
// (MinusEta); equals R_Y(2 s mu phi) on that site.
Matrix conditional_unitary(double phi, int mu, int site, int n_qubits,
                           SignConvention sc = SignConvention::PlusEta);

struct ProtocolResult {
  ProtocolVariant variant;
  double phi;
  SignConvention sign_convention;

  double e_deposit_alice;
  std::optional<double> e_deposit_charlie;  // second sender (MISO only)

  // Receiver-attributed energy: sum of the receiver operator's terms
  // (H1+V for the minimal model, H2+V02+V12 for MISO, H1+V01+H2+V02 for
  // SIMO).
  double e_receiver;

  std::map<std::pair<int, int>, double> v_terms;  // every coupling's expectation
  std::map<int, double> h_terms;                  // every local term's expectation
  DensityMatrix rho_qet;
  double trace_total;  // Tr[rho_qet H_tot]

  // (sum of |negative receiver-side V terms|) / (sum of deposits)
  double efficiency_v_only;

  double total_deposit() const {
    return e_deposit_alice + e_deposit_charlie.value_or(0.0);
  }
};

ProtocolResult run_minimal(const ModelInstance& m, double phi,
                           SignConvention sc = SignConvention::PlusEta);
ProtocolResult run_miso(const ModelInstance& m, double phi,
                        SignConvention sc = SignConvention::PlusEta);
ProtocolResult run_simo(const ModelInstance& m, double phi,
                        SignConvention sc = SignConvention::PlusEta);
// Split feedback angles for the two SIMO receivers (extension knob; the
// protocol proper uses one shared phi).
ProtocolResult run_simo_split(const ModelInstance& m, double phi_charlie, double phi_bob,
                              SignConvention sc = SignConvention::PlusEta);

ProtocolResult run(const ModelInstance& m, ProtocolVariant variant, double phi,
                   SignConvention sc);

// Sender/receiver sites for a variant (Alice=0 everywhere; the minimal
// receiver is site 1, the extended receiver site 2).
std::pair<int, int> angle_sites(ProtocolVariant variant);
std::vector<int> sender_sites(ProtocolVariant variant);
std::vector<int> receiver_sites(ProtocolVariant variant);

// Closed-form angles for the variant with the mu-pairing resolved
// empirically: both rotation directions are evaluated and the one with the
// lower receiver energy is recorded.
ProtocolAngles closed_form_angles(const ModelInstance& m, ProtocolVariant variant);

struct OptimizedPhi {
  double phi;
  double e_receiver;
  SignConvention sign_convention;
};

// Minimizes the receiver energy over phi in [0, pi/2] (coarse scan plus
// golden-section refinement); never worse than the closed-form angle.
OptimizedPhi optimize_phi(const ModelInstance& m, ProtocolVariant variant);

struct PassivityReport {
  double min_eigenvalue;       // of H_tot; zero within 1e-9 by construction
  double min_defect;           // min over unitaries of <g|W^dag H W|g>
  std::size_t n_checked;
  std::size_t n_violations;    // defects below -1e-9
  std::vector<double> defects; // one per checked unitary (user list first)
};

// Extraction defect <g|W^dag H_tot W|g> for each W in `unitaries` (each a
// per-receiver-site list of 2x2 blocks) plus `n_random` seeded Haar-random
// receiver-local unitaries.
PassivityReport passivity_check(const ModelInstance& m, ProtocolVariant variant,
                                const std::vector<std::vector<Matrix>>& unitaries,
                                std::size_t n_random = 200, std::uint64_t seed = 7);

struct TimeEvolutionReport {
  std::vector<double> times;
  std::map<int, std::vector<double>> h_series;                  // <H_i(t)>
  std::map<std::pair<int, int>, std::vector<double>> v_series;  // <V_ij(t)>
  double deposit;  // Tr[rho_M H_tot], conserved along the series
};

// Heisenberg-picture series Tr[rho_M e^{itH} Op e^{-itH}] for every term,
// with rho_M the post-measurement (no feedback) ensemble of `senders`.
// <V_ij(0)> = 0 is asserted; later times are reported as data.
TimeEvolutionReport time_evolution_report(const ModelInstance& m,
                                          const std::vector<int>& senders,
                                          const std::vector<double>& times);

struct EntropyReport {
  double s_before;          // S_AB of the ground state (nats)
  double s_after_weighted;  // sum_mu p_mu S_AB(mu)
  double delta;             // s_before - s_after_weighted
};

// Entanglement entropy across `part_a` | complement before and after the
// senders' measurements.
EntropyReport entropy_change(const ModelInstance& m, const std::vector<int>& senders,
                             const std::vector<int>& part_a);

}  // namespace qet::protocol
