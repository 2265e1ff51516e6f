#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qet/circuit.hpp"

using namespace qet;
using namespace qet::circuit;
using doctest::Approx;

namespace {

model::ModelInstance minimal(double h, double k) {
  return model::build_minimal({h, k, model::Variant::Minimal2});
}

model::ModelInstance extended(double h, double k) {
  return model::build_extended({h, k, model::Variant::Extended3});
}

double max_dist_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("exact simulation of elementary circuits") {
  SUBCASE("empty circuit measures |000>") {
    Circuit c(3, 3);
    for (int q = 0; q < 3; ++q) c.append(Gate::measure_z(q, q));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[0] == Approx(1.0));
    for (std::size_t i = 1; i < 8; ++i) CHECK(res.distribution[i] == 0.0);
  }
  SUBCASE("H then measure is a fair coin") {
    Circuit c(1, 1);
    c.append(Gate::hadamard(0));
    c.append(Gate::measure_z(0, 0));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[0] == Approx(0.5).epsilon(1e-15));
    CHECK(res.distribution[1] == Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("Bell pair correlations") {
    Circuit c(2, 2);
    c.append(Gate::hadamard(0));
    c.append(Gate::cnot(0, 1));
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::measure_z(1, 1));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[0b00] == Approx(0.5));
    CHECK(res.distribution[0b11] == Approx(0.5));
    CHECK(res.distribution[0b01] == 0.0);
    CHECK(res.distribution[0b10] == 0.0);
  }
  SUBCASE("classically controlled correction tracks the coin") {
    Circuit c(2, 2);
    c.append(Gate::hadamard(0));
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::classically_controlled(Gate::pauli_x(1), 0));
    c.append(Gate::measure_z(1, 1));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[0b00] == Approx(0.5));
    CHECK(res.distribution[0b11] == Approx(0.5));
  }
  SUBCASE("phase rotation: H RZ(pi) H maps |0> to |1>") {
    Circuit c(1, 1);
    c.append(Gate::hadamard(0));
    c.append(Gate::rot_z(0, std::acos(-1.0)));
    c.append(Gate::hadamard(0));
    c.append(Gate::measure_z(0, 0));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[1] == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("controlled-U acts only on the control-1 subspace") {
    Circuit c(2, 2);
    c.append(Gate::hadamard(0));
    c.append(Gate::controlled_u(0, 1, pauli_x()));  // a CNOT in disguise
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::measure_z(1, 1));
    const auto res = simulate_exact(c);
    CHECK(res.distribution[0b00] == Approx(0.5));
    CHECK(res.distribution[0b11] == Approx(0.5));
  }
  SUBCASE("malformed circuits are rejected") {
    Circuit c(1, 1);
    c.append(Gate::classically_controlled(Gate::pauli_x(0), 0));  // bit never written
    CHECK_THROWS_AS(simulate_exact(c), std::invalid_argument);

    Circuit unwritten(1, 1);
    unwritten.append(Gate::hadamard(0));
    CHECK_THROWS_AS(simulate_exact(unwritten), std::invalid_argument);
  }
}

TEST_CASE("deferred measurement rewrite") {
  SUBCASE("circuit with no measurements is unchanged") {
    Circuit c(2, 0);
    c.append(Gate::hadamard(0));
    c.append(Gate::cnot(0, 1));
    const Circuit d = defer_measurements(c);
    CHECK(to_text(d) == to_text(c));
  }
  SUBCASE("classical control becomes a coherent control") {
    Circuit c(2, 2);
    c.mid_measurement = true;
    c.append(Gate::hadamard(0));
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::classically_controlled(Gate::rot_y(1, 0.7), 0));
    c.append(Gate::measure_z(1, 1));
    const Circuit d = defer_measurements(c);
    bool seen_measure = false;
    for (const Gate& g : d.gates) {
      if (g.kind == GateKind::MeasureZ) seen_measure = true;
      else CHECK(!seen_measure);  // all measurements moved to the end
    }
    CHECK(max_dist_diff(simulate_exact(c).distribution, simulate_exact(d).distribution) <
          1e-12);
  }
  SUBCASE("whole protocol circuits: identical exact distributions") {
    for (const auto& [h, k] : {std::pair{1.0, 3.0}, {1.0, 4.0}}) {
      for (const auto variant : {protocol::ProtocolVariant::Minimal,
                                 protocol::ProtocolVariant::Miso,
                                 protocol::ProtocolVariant::Simo}) {
        const auto m = variant == protocol::ProtocolVariant::Minimal ? minimal(h, k)
                                                                     : extended(h, k);
        const auto angles = protocol::closed_form_angles(m, variant);
        const auto circuits = build_protocol_circuits(m, variant, angles.phi,
                                                      angles.sign_convention);
        for (const auto& [name, mid] : circuits.mid) {
          const auto& deferred = circuits.deferred.at(name);
          CHECK(max_dist_diff(simulate_exact(mid).distribution,
                              simulate_exact(deferred).distribution) < 1e-12);
        }
      }
    }
  }
  SUBCASE("unsupported topologies raise") {
    Circuit c(2, 1);
    c.mid_measurement = true;
    c.append(Gate::hadamard(0));
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::hadamard(0));  // unitary on a measured qubit
    CHECK_THROWS_AS(defer_measurements(c), std::invalid_argument);
  }
}

TEST_CASE("ground-state preparation") {
  SUBCASE("basis state |111> needs only the two-angle template") {
    StateVector target(8);
    target[7] = Complex{1, 0};
    const auto prep = prepare_ground_circuit(target);
    CHECK(prep.fidelity >= 1.0 - 1e-9);
    CHECK_FALSE(prep.extended);
  }
  SUBCASE("eigensolver targets reach fidelity 1 with the extra rotation") {
    for (const auto& [h, k] : {std::pair{1.0, 4.0}, {1.0, 3.0}}) {
      const auto m = extended(h, k);
      const auto prep = prepare_ground_circuit(m.ground);
      CHECK(prep.fidelity >= 1.0 - 1e-9);

      // energy of the prepared state itself, before any measurement
      const auto state_res = simulate_exact(prep.circuit);
      CHECK(expectation(state_res.final_density, m.total) <= 1e-6);

      Circuit probe = prep.circuit;
      probe.n_classical_bits = 3;
      for (int q = 0; q < 3; ++q) probe.append(Gate::measure_z(q, q));
      const auto res = simulate_exact(probe);
      for (std::size_t i : {0u, 3u, 5u, 6u}) CHECK(res.distribution[i] < 1e-12);
    }
  }
  SUBCASE("prep reaches targets across the parameter range") {
    for (const auto& [h, k] :
         {std::pair{0.2, 0.2}, {0.2, 5.0}, {5.0, 0.2}, {5.0, 5.0}, {2.0, 3.0}}) {
      const auto m = extended(h, k);
      const auto prep = prepare_ground_circuit(m.ground);
      CHECK(prep.fidelity >= 1.0 - 1e-9);
    }
  }
  SUBCASE("targets outside the family are rejected") {
    StateVector bad(8);
    bad[0] = Complex{1, 0};
    CHECK_THROWS_AS(prepare_ground_circuit(bad), std::invalid_argument);
  }
  SUBCASE("minimal prep hits the two-qubit ground state") {
    const auto m = minimal(1.0, 1.5);
    const auto prep = prepare_minimal_ground_circuit(m.ground);
    CHECK(prep.fidelity >= 1.0 - 1e-12);
  }
}

TEST_CASE("estimators") {
  SUBCASE("plain Z estimator arithmetic") {
    ShotHistogram hist;
    hist.width = 1;
    hist.shots = 1000;
    hist.counts = {{"0", 750}, {"1", 250}};
    CHECK(estimate_z(hist, 0) == Approx(0.5));

    ShotHistogram zeros;
    zeros.width = 1;
    zeros.shots = 64;
    zeros.counts = {{"0", 64}};
    CHECK(estimate_z(zeros, 0) == Approx(1.0));

    ShotHistogram pairs;
    pairs.width = 2;
    pairs.shots = 1000;
    pairs.counts = {{"00", 500}, {"11", 500}};
    CHECK(estimate_z(pairs, 1) == Approx(0.0));

    ShotHistogram empty;
    CHECK_THROWS_AS(estimate_z(empty, 0), std::invalid_argument);
  }
  SUBCASE("XX estimator arithmetic") {
    ShotHistogram aligned;
    aligned.width = 2;
    aligned.shots = 10;
    aligned.counts = {{"00", 10}};
    CHECK(estimate_xx(aligned, 0, 1) == Approx(1.0));
    ShotHistogram anti;
    anti.width = 2;
    anti.shots = 10;
    anti.counts = {{"01", 10}};
    CHECK(estimate_xx(anti, 0, 1) == Approx(-1.0));
  }
  SUBCASE("Bell pair gives <XX> = +1 from the exact distribution") {
    Circuit c(2, 2);
    c.append(Gate::hadamard(0));
    c.append(Gate::cnot(0, 1));
    c.append(Gate::hadamard(0));
    c.append(Gate::hadamard(1));
    c.append(Gate::measure_z(0, 0));
    c.append(Gate::measure_z(1, 1));
    const auto res = simulate_exact(c);
    ObservableSpec xx{"XX", {{1.0, {{0, 'X'}, {1, 'X'}}}}, 0.0};
    CHECK(estimate_observable_exact(res.distribution, 2, xx) == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("offset-only spec returns the offset exactly") {
    ObservableSpec spec{"const", {}, 0.625};
    ShotHistogram hist;
    hist.width = 1;
    hist.shots = 4;
    hist.counts = {{"0", 4}};
    CHECK(estimate_observable(hist, spec) == 0.625);
  }
  SUBCASE("missing basis histogram raises") {
    ObservableSpec spec{"V", {{1.0, {{0, 'X'}, {1, 'X'}}}}, 0.0};
    std::map<std::string, ShotHistogram> by_basis;
    ShotHistogram z;
    z.width = 2;
    z.shots = 1;
    z.counts = {{"00", 1}};
    by_basis["ZZ"] = z;
    CHECK_THROWS_AS(estimate_observable(by_basis, spec), std::invalid_argument);
    by_basis["XX"] = z;
    CHECK(estimate_observable(by_basis, spec) == Approx(1.0));
  }
}

TEST_CASE("protocol circuits reproduce the density-matrix values exactly") {
  for (const auto& [h, k] : {std::pair{1.0, 1.5}, {1.5, 1.0}}) {
    const auto m = minimal(h, k);
    const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Minimal);
    const auto res = protocol::run_minimal(m, angles.phi, angles.sign_convention);
    const auto circuits = build_protocol_circuits(m, protocol::ProtocolVariant::Minimal,
                                                  angles.phi, angles.sign_convention);
    CHECK(circuits.mid.size() == 2);

    const auto exact_v = simulate_exact(circuits.deferred.at("V"));
    const double v = estimate_observable_exact(exact_v.distribution, 2,
                                               circuits.observables.at("V"));
    CHECK(v == Approx(res.v_terms.at({0, 1})).epsilon(1e-9));

    const auto exact_h = simulate_exact(circuits.deferred.at("H1"));
    const double h1 = estimate_observable_exact(exact_h.distribution, 2,
                                                circuits.observables.at("H1"));
    CHECK(h1 == Approx(res.h_terms.at(1)).epsilon(1e-9));
  }
}

TEST_CASE("MISO and SIMO circuit counts and estimates") {
  const auto m = extended(1.0, 3.0);

  const auto miso_angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Miso);
  const auto miso = build_protocol_circuits(m, protocol::ProtocolVariant::Miso,
                                            miso_angles.phi, miso_angles.sign_convention);
  CHECK(miso.mid.size() == 3);
  CHECK(miso.mid.count("H2") == 1);
  CHECK(miso.mid.count("V02") == 1);
  CHECK(miso.mid.count("V12") == 1);

  const auto miso_res = protocol::run_miso(m, miso_angles.phi, miso_angles.sign_convention);
  for (const auto& [name, spec] : miso.observables) {
    const auto exact = simulate_exact(miso.deferred.at(name));
    const double est = estimate_observable_exact(exact.distribution, 3, spec);
    const double reference =
        name == "H2" ? miso_res.h_terms.at(2)
                     : (name == "V02" ? miso_res.v_terms.at({0, 2})
                                      : miso_res.v_terms.at({1, 2}));
    CHECK(est == Approx(reference).epsilon(1e-9));
  }

  const auto simo_angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Simo);
  const auto simo = build_protocol_circuits(m, protocol::ProtocolVariant::Simo,
                                            simo_angles.phi, simo_angles.sign_convention);
  CHECK(simo.mid.size() == 4);
  const auto simo_res = protocol::run_simo(m, simo_angles.phi, simo_angles.sign_convention);
  for (const auto& [name, spec] : simo.observables) {
    const auto exact = simulate_exact(simo.deferred.at(name));
    const double est = estimate_observable_exact(exact.distribution, 3, spec);
    double reference = 0;
    if (name == "H1") reference = simo_res.h_terms.at(1);
    else if (name == "H2") reference = simo_res.h_terms.at(2);
    else if (name == "V01") reference = simo_res.v_terms.at({0, 1});
    else reference = simo_res.v_terms.at({0, 2});
    CHECK(est == Approx(reference).epsilon(1e-9));
  }
}

TEST_CASE("deferred protocol circuits stay within the depth budget") {
  const auto m = extended(1.0, 4.0);
  const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Simo);
  for (const auto variant :
       {protocol::ProtocolVariant::Miso, protocol::ProtocolVariant::Simo}) {
    const auto circuits =
        build_protocol_circuits(m, variant, angles.phi, angles.sign_convention);
    for (const auto& [name, c] : circuits.deferred) {
      const auto depth = c.gates_per_qubit();
      MESSAGE("deferred ", name, " gates per line: ", depth[0], " ", depth[1], " ",
              depth[2]);
      for (int d : depth) CHECK(d <= 12);
    }
  }
}

TEST_CASE("circuit serialization and hashing") {
  Circuit c(2, 2);
  c.append(Gate::hadamard(0));
  c.append(Gate::rot_y(1, 0.25));
  c.append(Gate::cnot(0, 1));
  c.append(Gate::measure_z(0, 0));
  const std::string text = to_text(c);
  CHECK(text.find("H t0") != std::string::npos);
  CHECK(text.find("CNOT t1 c0") != std::string::npos);
  CHECK(text.find("M t0 b0") != std::string::npos);

  Circuit c2 = c;
  CHECK(circuit_hash(c) == circuit_hash(c2));
  c2.append(Gate::measure_z(1, 1));
  CHECK(circuit_hash(c) != circuit_hash(c2));
}

TEST_CASE("circuit validation catches structural misuse") {
  Circuit c(2, 1);
  c.append(Gate::measure_z(0, 0));
  c.append(Gate::hadamard(0));  // reuse after measurement without the flag
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  Circuit flagged = c;
  flagged.mid_measurement = true;
  CHECK_NOTHROW(flagged.validate());

  Circuit out_of_range(1, 1);
  out_of_range.append(Gate::hadamard(1));
  CHECK_THROWS_AS(out_of_range.validate(), std::invalid_argument);
}
