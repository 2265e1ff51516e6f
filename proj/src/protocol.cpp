#include "qet/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qet/rng.hpp"

namespace qet::protocol {

namespace {

Matrix x_projector(int site, int mu, int n_qubits) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  return (Matrix::identity(dim) + embed(pauli_x(), {site}, n_qubits) * Complex{double(mu), 0}) *
         Complex{0.5, 0};
}

// Unnormalized post-measurement branches of the ground state for the given
// sender sequence; weights are branch probabilities.
struct Branch {
  StateVector psi;  // unnormalized: <psi|psi> = probability
  std::vector<int> mus;
};

std::vector<Branch> measurement_branches(const ModelInstance& m,
                                         const std::vector<int>& senders) {
  std::vector<Branch> branches{{m.ground, {}}};
  for (int site : senders) {
    if (site < 0 || site >= m.n_qubits)
      throw std::invalid_argument("sender site out of range");
    std::vector<Branch> next;
    next.reserve(branches.size() * 2);
    for (const Branch& b : branches) {
      for (int mu : {+1, -1}) {
        Branch nb;
        nb.psi = apply(x_projector(site, mu, m.n_qubits), b.psi);
        nb.mus = b.mus;
        nb.mus.push_back(mu);
        next.push_back(std::move(nb));
      }
    }
    branches = std::move(next);
  }
  return branches;
}

double branch_weight(const Branch& b) {
  double s = 0;
  for (std::size_t i = 0; i < b.psi.dim(); ++i) s += std::norm(b.psi[i]);
  return s;
}

ProtocolResult finish_result(const ModelInstance& m, ProtocolVariant variant, double phi,
                             SignConvention sc, Matrix rho, double dep_alice,
                             std::optional<double> dep_charlie) {
  ProtocolResult r;
  r.variant = variant;
  r.phi = phi;
  r.sign_convention = sc;
  r.e_deposit_alice = dep_alice;
  r.e_deposit_charlie = dep_charlie;
  r.rho_qet = DensityMatrix::unchecked(std::move(rho));
  for (const auto& t : m.locals) r.h_terms[t.site] = expectation(r.rho_qet, t.op);
  for (const auto& t : m.couplings) r.v_terms[t.sites] = expectation(r.rho_qet, t.op);
  r.trace_total = expectation(r.rho_qet, m.total);

  double recv = 0;
  for (int s : receiver_sites(variant)) recv += r.h_terms.at(s);
  double v_extract = 0;
  for (const auto& [pair, val] : r.v_terms) {
    const bool receiver_edge =
        variant == ProtocolVariant::Minimal ||
        (variant == ProtocolVariant::Miso && pair.second == 2) ||
        (variant == ProtocolVariant::Simo && pair.first == 0);
    if (!receiver_edge) continue;
    recv += val;
    if (val < 0) v_extract += -val;
  }
  r.e_receiver = recv;
  r.efficiency_v_only = v_extract / r.total_deposit();
  return r;
}

}  // namespace

std::vector<MeasurementOutcome> measure_x(const StateVector& state, int site) {
  const int n = state.n_qubits();
  if (site < 0 || site >= n) throw std::invalid_argument("measure_x: site out of range");
  std::vector<MeasurementOutcome> out;
  for (int mu : {+1, -1}) {
    MeasurementOutcome o;
    o.mu = mu;
    StateVector branch = apply(x_projector(site, mu, n), state);
    o.probability = branch.norm() * branch.norm();
    if (o.probability > 1e-24) {
      branch.normalize();
      o.post_state = std::move(branch);
    } else {
      o.probability = 0.0;
      o.post_state = StateVector(state.dim());  // zero vector, retained
    }
    out.push_back(std::move(o));
  }
  return out;
}

double deposit_energy(const ModelInstance& m, const std::vector<int>& senders,
                      const std::vector<int>& receiver_sites) {
  for (int s : senders)
    for (int r : receiver_sites)
      if (s == r)
        throw std::invalid_argument("deposit_energy: sender site overlaps a receiver");
  return deposit_energy(m, senders);
}

double deposit_energy(const ModelInstance& m, const std::vector<int>& senders) {
  if (senders.empty()) throw std::invalid_argument("deposit_energy: no senders");
  for (std::size_t i = 0; i < senders.size(); ++i)
    for (std::size_t j = i + 1; j < senders.size(); ++j)
      if (senders[i] == senders[j])
        throw std::invalid_argument("deposit_energy: duplicate sender site");
  std::vector<int> head(senders.begin(), senders.end() - 1);

  const auto total_after = [&](const std::vector<int>& s) {
    double e = 0;
    for (const Branch& b : measurement_branches(m, s))
      e += expectation(DensityMatrix::unchecked(outer(b.psi)), m.total);
    return e;
  };
  const double before = head.empty() ? 0.0 : total_after(head);
  return total_after(senders) - before;
}

Matrix conditional_unitary(double phi, int mu, int site, int n_qubits, SignConvention sc) {
  if (!std::isfinite(phi)) throw std::invalid_argument("conditional_unitary: phi is not finite");
  const double s = sc == SignConvention::PlusEta ? 1.0 : -1.0;
  const std::size_t dim = std::size_t{1} << n_qubits;
  return Matrix::identity(dim) * Complex{std::cos(phi), 0} +
         embed(pauli_y(), {site}, n_qubits) * Complex{0, -s * mu * std::sin(phi)};
}

std::pair<int, int> angle_sites(ProtocolVariant variant) {
  switch (variant) {
    case ProtocolVariant::Minimal: return {0, 1};
    case ProtocolVariant::Miso: return {0, 2};
    case ProtocolVariant::Simo: return {0, 2};
  }
  throw std::logic_error("unknown variant");
}

std::vector<int> sender_sites(ProtocolVariant variant) {
  return variant == ProtocolVariant::Miso ? std::vector<int>{0, 1} : std::vector<int>{0};
}

std::vector<int> receiver_sites(ProtocolVariant variant) {
  switch (variant) {
    case ProtocolVariant::Minimal: return {1};
    case ProtocolVariant::Miso: return {2};
    case ProtocolVariant::Simo: return {1, 2};
  }
  throw std::logic_error("unknown variant");
}

ProtocolResult run_minimal(const ModelInstance& m, double phi, SignConvention sc) {
  if (m.params.variant != model::Variant::Minimal2)
    throw std::invalid_argument("run_minimal requires the two-qubit model");
  if (!std::isfinite(phi)) throw std::invalid_argument("phi is not finite");
  const double dep = deposit_energy(m, {0}, receiver_sites(ProtocolVariant::Minimal));
  Matrix rho(4);
  for (const Branch& b : measurement_branches(m, {0})) {
    const Matrix u = conditional_unitary(phi, b.mus[0], 1, 2, sc);
    rho += outer(apply(u, b.psi));
  }
  return finish_result(m, ProtocolVariant::Minimal, phi, sc, std::move(rho), dep,
                       std::nullopt);
}

ProtocolResult run_miso(const ModelInstance& m, double phi, SignConvention sc) {
  if (m.params.variant != model::Variant::Extended3)
    throw std::invalid_argument("run_miso requires the three-qubit model");
  if (!std::isfinite(phi)) throw std::invalid_argument("phi is not finite");
  const double dep_a = deposit_energy(m, {0}, receiver_sites(ProtocolVariant::Miso));
  const double dep_c = deposit_energy(m, {0, 1}, receiver_sites(ProtocolVariant::Miso));
  Matrix rho(8);
  for (const Branch& b : measurement_branches(m, {0, 1})) {
    // Both senders' bits drive successive rotations of Bob's qubit with the
    // same phi: U_b(mu1) U_b(mu0).
    StateVector psi = apply(conditional_unitary(phi, b.mus[0], 2, 3, sc), b.psi);
    psi = apply(conditional_unitary(phi, b.mus[1], 2, 3, sc), psi);
    rho += outer(psi);
  }
  return finish_result(m, ProtocolVariant::Miso, phi, sc, std::move(rho), dep_a, dep_c);
}

ProtocolResult run_simo_split(const ModelInstance& m, double phi_charlie, double phi_bob,
                              SignConvention sc) {
  if (m.params.variant != model::Variant::Extended3)
    throw std::invalid_argument("run_simo requires the three-qubit model");
  if (!std::isfinite(phi_charlie) || !std::isfinite(phi_bob))
    throw std::invalid_argument("phi is not finite");
  const double dep_a = deposit_energy(m, {0}, receiver_sites(ProtocolVariant::Simo));
  Matrix rho(8);
  for (const Branch& b : measurement_branches(m, {0})) {
    StateVector psi = apply(conditional_unitary(phi_charlie, b.mus[0], 1, 3, sc), b.psi);
    psi = apply(conditional_unitary(phi_bob, b.mus[0], 2, 3, sc), psi);
    rho += outer(psi);
  }
  ProtocolResult r = finish_result(m, ProtocolVariant::Simo, phi_bob, sc, std::move(rho),
                                   dep_a, std::nullopt);
  return r;
}

ProtocolResult run_simo(const ModelInstance& m, double phi, SignConvention sc) {
  return run_simo_split(m, phi, phi, sc);
}

ProtocolResult run(const ModelInstance& m, ProtocolVariant variant, double phi,
                   SignConvention sc) {
  switch (variant) {
    case ProtocolVariant::Minimal: return run_minimal(m, phi, sc);
    case ProtocolVariant::Miso: return run_miso(m, phi, sc);
    case ProtocolVariant::Simo: return run_simo(m, phi, sc);
  }
  throw std::logic_error("unknown variant");
}

ProtocolAngles closed_form_angles(const ModelInstance& m, ProtocolVariant variant) {
  const auto [sender, receiver] = angle_sites(variant);
  ProtocolAngles a = model::compute_angles(m, sender, receiver);
  const double e_plus = run(m, variant, a.phi, SignConvention::PlusEta).e_receiver;
  const double e_minus = run(m, variant, a.phi, SignConvention::MinusEta).e_receiver;
  a.sign_convention =
      e_plus <= e_minus ? SignConvention::PlusEta : SignConvention::MinusEta;
  return a;
}

OptimizedPhi optimize_phi(const ModelInstance& m, ProtocolVariant variant) {
  const ProtocolAngles cf = closed_form_angles(m, variant);
  const SignConvention sc = cf.sign_convention;
  const auto energy = [&](double phi) { return run(m, variant, phi, sc).e_receiver; };

  // Coarse scan guards against non-unimodal landscapes, then golden-section
  // refinement inside the best bracket.
  const int n_scan = 1024;
  const double lo = 0.0, hi = std::acos(-1.0) / 2.0;
  int best_i = 0;
  double best_e = energy(lo);
  for (int i = 1; i <= n_scan; ++i) {
    const double e = energy(lo + (hi - lo) * i / n_scan);
    if (e < best_e) {
      best_e = e;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / n_scan;
  double b = lo + (hi - lo) * std::min(n_scan, best_i + 1) / n_scan;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = energy(c), fd = energy(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = energy(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = energy(d);
    }
  }
  OptimizedPhi out;
  out.phi = 0.5 * (a + b);
  out.e_receiver = energy(out.phi);
  out.sign_convention = sc;
  // The optimizer must never lose to the closed-form angle.
  const double e_cf = energy(cf.phi);
  if (e_cf < out.e_receiver) {
    out.phi = cf.phi;
    out.e_receiver = e_cf;
  }
  return out;
}

namespace {

// Haar-random 2x2 unitary from seeded Gaussians via Gram-Schmidt.
Matrix haar_2x2(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  double g[8];
  for (int i = 0; i < 4; ++i) {
    const double u1 = CounterRng::uniform(seed, stream, index * 8 + 2 * i);
    const double u2 = CounterRng::uniform(seed, stream, index * 8 + 2 * i + 1);
    const double two_pi = 2.0 * std::acos(-1.0);
    const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
    g[2 * i] = r * std::cos(two_pi * u2);
    g[2 * i + 1] = r * std::sin(two_pi * u2);
  }
  Complex c0{g[0], g[1]}, c1{g[2], g[3]}, c2{g[4], g[5]}, c3{g[6], g[7]};
  // first column
  double n0 = std::sqrt(std::norm(c0) + std::norm(c1));
  c0 /= n0;
  c1 /= n0;
  // project and normalize second column
  const Complex proj = std::conj(c0) * c2 + std::conj(c1) * c3;
  c2 -= proj * c0;
  c3 -= proj * c1;
  double n1 = std::sqrt(std::norm(c2) + std::norm(c3));
  c2 /= n1;
  c3 /= n1;
  return Matrix::two_by_two(c0, c2, c1, c3);
}

}  // namespace

PassivityReport passivity_check(const ModelInstance& m, ProtocolVariant variant,
                                const std::vector<std::vector<Matrix>>& unitaries,
                                std::size_t n_random, std::uint64_t seed) {
  const std::vector<int> sites = receiver_sites(variant);
  PassivityReport rep;
  rep.min_eigenvalue = eigh(m.total).eigenvalues.front();
  rep.min_defect = std::numeric_limits<double>::infinity();
  rep.n_violations = 0;

  const auto check = [&](const std::vector<Matrix>& blocks) {
    if (blocks.size() != sites.size())
      throw std::invalid_argument("passivity_check: one 2x2 block per receiver site");
    Matrix w = Matrix::identity(std::size_t{1} << m.n_qubits);
    for (std::size_t i = 0; i < sites.size(); ++i)
      w = embed(blocks[i], {sites[i]}, m.n_qubits) * w;
    const double defect = expectation(apply(w, m.ground), m.total);
    rep.defects.push_back(defect);
    rep.min_defect = std::min(rep.min_defect, defect);
    if (defect < -kAlgebraTol) ++rep.n_violations;
  };

  for (const auto& blocks : unitaries) check(blocks);
  for (std::size_t i = 0; i < n_random; ++i) {
    std::vector<Matrix> blocks;
    for (std::size_t s = 0; s < sites.size(); ++s)
      blocks.push_back(haar_2x2(seed, 0x9a55u + s, i));
    check(blocks);
  }
  rep.n_checked = rep.defects.size();
  return rep;
}

TimeEvolutionReport time_evolution_report(const ModelInstance& m,
                                          const std::vector<int>& senders,
                                          const std::vector<double>& times) {
  Matrix rho_m(std::size_t{1} << m.n_qubits);
  for (const Branch& b : measurement_branches(m, senders)) rho_m += outer(b.psi);
  const DensityMatrix rho = DensityMatrix::unchecked(std::move(rho_m));

  TimeEvolutionReport rep;
  rep.times = times;
  rep.deposit = expectation(rho, m.total);
  for (const auto& t : m.locals) rep.h_series[t.site] = {};
  for (const auto& t : m.couplings) rep.v_series[t.sites] = {};

  for (double t : times) {
    const Matrix u = evolve(m.total, t);        // e^{-itH}
    const Matrix u_dag = u.adjoint();           // e^{+itH}
    for (const auto& term : m.locals)
      rep.h_series[term.site].push_back(expectation(rho, u_dag * term.op * u));
    for (const auto& term : m.couplings)
      rep.v_series[term.sites].push_back(expectation(rho, u_dag * term.op * u));
  }

  // At t = 0 the couplings commute with every sender projector, so their
  // post-measurement means are still zero.
  for (const auto& [pair, series] : rep.v_series) {
    if (!series.empty() && std::abs(times.front()) < 1e-15 &&
        std::abs(series.front()) > kAlgebraTol)
      throw std::logic_error("coupling expectation at t=0 is nonzero");
  }
  return rep;
}

EntropyReport entropy_change(const ModelInstance& m, const std::vector<int>& senders,
                             const std::vector<int>& part_a) {
  if (part_a.empty() || part_a.size() >= static_cast<std::size_t>(m.n_qubits))
    throw std::invalid_argument("entropy_change: bipartition must split the qubits");
  for (int s : part_a)
    if (s < 0 || s >= m.n_qubits)
      throw std::invalid_argument("entropy_change: site out of range");

  const DensityMatrix rho_g = DensityMatrix::unchecked(outer(m.ground));
  EntropyReport rep;
  rep.s_before = von_neumann_entropy(partial_trace(rho_g, part_a, m.n_qubits));
  rep.s_after_weighted = 0;
  for (const Branch& b : measurement_branches(m, senders)) {
    const double p = branch_weight(b);
    if (p <= 1e-24) continue;
    StateVector psi = b.psi;
    psi.normalize();
    const DensityMatrix reduced =
        partial_trace(DensityMatrix::unchecked(outer(psi)), part_a, m.n_qubits);
    rep.s_after_weighted += p * von_neumann_entropy(reduced);
  }
  rep.delta = rep.s_before - rep.s_after_weighted;
  return rep;
}

}  // namespace qet::protocol
