#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "oracles.hpp"
#include "qet/noise.hpp"

using namespace qet;
using namespace qet::noise;
using doctest::Approx;

namespace {

ReadoutProfile uniform_profile(double err, int n = 3, const std::string& label = "test") {
  ReadoutProfile p;
  p.label = label;
  for (int i = 0; i < n; ++i) p.qubits.push_back({100, 100, 4.5, err});
  return p;
}

circuit::Circuit z_plus_circuit() {
  circuit::Circuit c(1, 1);
  c.append(circuit::Gate::measure_z(0, 0));
  return c;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return tv / 2;
}

}  // namespace

TEST_CASE("bundled profiles reproduce the published calibration tables") {
  const auto kyiv = find_builtin("ibm_kyiv");
  REQUIRE(kyiv.has_value());
  REQUIRE(kyiv->qubits.size() == 4);
  CHECK(kyiv->qubits[0].readout_error == Approx(6.800e-3));
  CHECK(kyiv->qubits[1].readout_error == Approx(2.800e-3));
  CHECK(kyiv->qubits[2].readout_error == Approx(5.900e-3));
  CHECK(kyiv->qubits[3].readout_error == Approx(5.800e-3));
  CHECK(kyiv->qubits[0].t1_us == Approx(240.6));
  CHECK(kyiv->qubits[0].t2_us == Approx(300.7));

  const auto sherbrooke = find_builtin("ibm_sherbrooke");
  REQUIRE(sherbrooke.has_value());
  CHECK(sherbrooke->qubits[0].readout_error == Approx(1.580e-2));

  const auto brisbane = find_builtin("ibm_brisbane");
  REQUIRE(brisbane.has_value());
  CHECK(brisbane->qubits[1].readout_error == Approx(1.343e-1));

  CHECK_FALSE(find_builtin("ibm_nowhere").has_value());
}

TEST_CASE("bundled profile files match the builtin tables") {
  const char* src_env = std::getenv("QET_SOURCE_DIR");
  const std::string src = src_env ? src_env : ".";
  for (const std::string name : {"ibm_kyiv", "ibm_sherbrooke", "ibm_brisbane"}) {
    const auto from_file = load_profile_file(src + "/data/profiles/" + name + ".profile");
    const auto builtin = find_builtin(name);
    REQUIRE(builtin.has_value());
    CHECK(from_file.label == builtin->label);
    REQUIRE(from_file.qubits.size() == builtin->qubits.size());
    for (std::size_t q = 0; q < from_file.qubits.size(); ++q) {
      CHECK(from_file.qubits[q].readout_error == Approx(builtin->qubits[q].readout_error));
      CHECK(from_file.qubits[q].t1_us == Approx(builtin->qubits[q].t1_us));
      CHECK(from_file.qubits[q].t2_us == Approx(builtin->qubits[q].t2_us));
      CHECK(from_file.qubits[q].frequency_ghz == Approx(builtin->qubits[q].frequency_ghz));
    }
  }
}

TEST_CASE("profile files round-trip and reject malformed input") {
  const auto kyiv = *find_builtin("ibm_kyiv");
  const std::string text = serialize_profile(kyiv);
  std::istringstream in(text);
  const auto parsed = parse_profile(in);
  CHECK(parsed.label == kyiv.label);
  REQUIRE(parsed.qubits.size() == kyiv.qubits.size());
  for (std::size_t i = 0; i < parsed.qubits.size(); ++i) {
    CHECK(parsed.qubits[i].readout_error == Approx(kyiv.qubits[i].readout_error));
    CHECK(parsed.qubits[i].t1_us == Approx(kyiv.qubits[i].t1_us));
  }

  std::istringstream bad("label: x\nqubit 0 : readout_error=0.9\n");
  CHECK_THROWS_AS(parse_profile(bad), std::invalid_argument);
  std::istringstream junk("nonsense line\n");
  CHECK_THROWS_AS(parse_profile(junk), std::invalid_argument);
}

TEST_CASE("calibration matrix construction") {
  SUBCASE("zero error gives the identity") {
    const auto M = build_calibration_matrix(uniform_profile(0.0), 3);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(M.at(i, j) == Approx(i == j ? 1.0 : 0.0));
  }
  SUBCASE("single-qubit entries match the confusion block") {
    ReadoutProfile p;
    p.label = "asym";
    QubitCalibration q;
    q.p10_override = 0.02;
    q.p01_override = 0.03;
    p.qubits.push_back(q);
    const auto M = build_calibration_matrix(p, 1);
    CHECK(M.at(0, 0) == Approx(0.98));
    CHECK(M.at(1, 0) == Approx(0.02));
    CHECK(M.at(0, 1) == Approx(0.03));
    CHECK(M.at(1, 1) == Approx(0.97));
  }
  SUBCASE("asymmetric flip probabilities round-trip through the file format") {
    std::istringstream in(
        "label: asym\n"
        "qubit 0 : t1_us=1 t2_us=1 frequency_ghz=1 readout_error=0.01 p10=0.02 p01=0.03\n");
    const auto p = parse_profile(in);
    CHECK(p.p10(0) == Approx(0.02));
    CHECK(p.p01(0) == Approx(0.03));
    std::istringstream again(serialize_profile(p));
    const auto p2 = parse_profile(again);
    CHECK(p2.p10(0) == Approx(0.02));
    CHECK(p2.p01(0) == Approx(0.03));
  }
  SUBCASE("columns are stochastic for three qubits") {
    const auto M = build_calibration_matrix(*find_builtin("ibm_kyiv"), 3);
    for (std::size_t j = 0; j < 8; ++j) {
      double col = 0;
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(M.at(i, j) >= 0.0);
        col += M.at(i, j);
      }
      CHECK(col == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("estimated calibration matrix") {
  const auto p = uniform_profile(0.05);
  SUBCASE("exact-distribution proxy equals the analytic matrix") {
    const auto analytic = build_calibration_matrix(p, 3);
    const auto estimated = estimate_calibration_matrix(p, 3, 0, 9);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(estimated.at(i, j) == Approx(analytic.at(i, j)).epsilon(1e-12));
  }
  SUBCASE("finite shots converge within the binomial bound") {
    const std::uint64_t shots = 100000;
    const auto analytic = build_calibration_matrix(p, 2);
    const auto estimated = estimate_calibration_matrix(p, 2, shots, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        const double q = analytic.at(i, j);
        const double bound = 5 * std::sqrt(std::max(q * (1 - q), 1e-12) / double(shots));
        CHECK(std::abs(estimated.at(i, j) - q) <= bound + 1e-9);
      }
  }
  SUBCASE("convergence rate is O(1/sqrt(shots))") {
    const auto analytic = build_calibration_matrix(p, 2);
    std::vector<double> errs;
    for (std::uint64_t shots : {1000ull, 10000ull, 100000ull, 1000000ull}) {
      const auto est = estimate_calibration_matrix(p, 2, shots, 31);
      double e = 0;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) e += std::pow(est.at(i, j) - analytic.at(i, j), 2);
      errs.push_back(std::sqrt(e));
    }
    // each 10x shot increase should cut the error by roughly sqrt(10);
    // allow generous slack for noise
    CHECK(errs[3] < errs[0]);
    CHECK(errs[3] * 8 < errs[0] * std::sqrt(1000.0));
  }
  SUBCASE("eight preparation circuits cover the three-qubit space") {
    // one column per basis state: all columns of the exact proxy are unit-sum
    const auto est = estimate_calibration_matrix(p, 3, 0, 0);
    CHECK(est.dim == 8);
    for (std::size_t j = 0; j < 8; ++j) {
      double col = 0;
      for (std::size_t i = 0; i < 8; ++i) col += est.at(i, j);
      CHECK(col == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("readout channel application") {
  SUBCASE("zero-error profile leaves the distribution unchanged") {
    const std::vector<double> dist = {0.3, 0.1, 0.45, 0.15};
    const auto noisy = apply_readout_noise(dist, uniform_profile(0.0, 2), 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(noisy[i] == Approx(dist[i]));
  }
  SUBCASE("single qubit at 10 percent") {
    const std::vector<double> dist = {1.0, 0.0};
    const auto noisy = apply_readout_noise(dist, uniform_profile(0.1, 1), 1);
    CHECK(noisy[0] == Approx(0.9));
    CHECK(noisy[1] == Approx(0.1));
  }
  SUBCASE("sampled path preserves the shot count exactly") {
    const auto hist = circuit::sample(z_plus_circuit(), 20000, 3);
    const auto noisy = apply_readout_noise(hist, uniform_profile(0.1, 1), 99);
    std::uint64_t total = 0;
    for (const auto& [key, count] : noisy.counts) total += count;
    CHECK(total == 20000);
  }
  SUBCASE("Z contraction law: noisy <Z> = (1 - p10 - p01) <Z> + (p01 - p10)") {
    const double p = 0.1;
    const auto hist = circuit::sample(z_plus_circuit(), 200000, 17);
    const auto noisy = apply_readout_noise(hist, uniform_profile(p, 1), 5);
    const double z = circuit::estimate_z(noisy, 0);
    const double contraction = 1 - 2 * p;  // symmetric channel: offset term vanishes
    const double sigma = std::sqrt(1.0 / 200000.0);
    CHECK(std::abs(z - contraction * 1.0) < 5 * sigma);

    ReadoutProfile asym;
    asym.label = "asym";
    QubitCalibration q;
    q.p10_override = 0.05;
    q.p01_override = 0.15;
    asym.qubits.push_back(q);
    const auto noisy2 = apply_readout_noise(hist, asym, 6);
    const double expected = (1 - 0.05 - 0.15) * 1.0 + (0.15 - 0.05);
    CHECK(std::abs(circuit::estimate_z(noisy2, 0) - expected) < 5 * sigma);
  }
  SUBCASE("width mismatch raises") {
    const std::vector<double> dist = {1.0, 0.0};
    CHECK_THROWS_AS(apply_readout_noise(dist, uniform_profile(0.1, 1), 2),
                    std::invalid_argument);
  }
  SUBCASE("depolarizing knob contracts toward the uniform distribution") {
    auto p = uniform_profile(0.1, 1);
    p.depolarizing = 0.5;
    const auto hist = circuit::sample(z_plus_circuit(), 400000, 8);
    const auto noisy = apply_readout_noise(hist, p, 21);
    // <Z> = (1 - lambda)(1 - p10 - p01) on the all-zeros input
    const double expected = (1 - 0.5) * (1 - 0.2);
    const double sigma = std::sqrt(1.0 / 400000.0);
    CHECK(std::abs(circuit::estimate_z(noisy, 0) - expected) < 5 * sigma);
  }
}

TEST_CASE("mitigation") {
  SUBCASE("identity matrix passes the input through") {
    circuit::ShotHistogram hist;
    hist.width = 2;
    hist.shots = 100;
    hist.counts = {{"00", 25}, {"01", 25}, {"10", 25}, {"11", 25}};
    const auto M = build_calibration_matrix(uniform_profile(0.0, 2), 2);
    const auto quasi = mitigate(hist, M);
    for (double v : quasi.clipped) CHECK(v == Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("clipped output is a normalized distribution") {
    const auto hist = circuit::sample(z_plus_circuit(), 2000, 7);
    const auto noisy = apply_readout_noise(hist, uniform_profile(0.2, 1), 3);
    for (const auto method :
         {MitigationMethod::NonnegativeLeastSquares, MitigationMethod::PlainInverse}) {
      const auto quasi = mitigate(noisy, build_calibration_matrix(uniform_profile(0.2, 1), 1),
                                  method);
      double sum = 0;
      for (double v : quasi.clipped) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("end-to-end recovery at one million shots") {
    // known exact distribution -> noisy shots -> mitigation ~ exact
    const auto m = model::build_extended({1.0, 3.0, model::Variant::Extended3});
    const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Simo);
    const auto circuits = circuit::build_protocol_circuits(
        m, protocol::ProtocolVariant::Simo, angles.phi, angles.sign_convention);
    const auto& c = circuits.deferred.at("V02");
    const auto exact = circuit::simulate_exact(c);

    const auto profile = uniform_profile(0.03);
    const auto hist = circuit::sample(c, 1000000, 12);
    const auto noisy = apply_readout_noise(hist, profile, 34);
    const auto M = build_calibration_matrix(profile, 3);
    const auto quasi = mitigate(noisy, M);
    CHECK(total_variation(quasi.clipped, exact.distribution) < 1e-2);
  }
  SUBCASE("singular channel is rejected") {
    circuit::ShotHistogram hist;
    hist.width = 1;
    hist.shots = 10;
    hist.counts = {{"0", 10}};
    CalibrationMatrix M;
    M.dim = 2;
    M.entries = {0.5, 0.5, 0.5, 0.5};  // p10 + p01 = 1
    CHECK_THROWS_AS(mitigate(hist, M), std::domain_error);
  }
  SUBCASE("plain inverse can go negative, NNLS cannot") {
    // craft an empirical vector outside the channel's image simplex
    circuit::ShotHistogram hist;
    hist.width = 1;
    hist.shots = 1000;
    hist.counts = {{"0", 999}, {"1", 1}};
    const auto M = build_calibration_matrix(uniform_profile(0.2, 1), 1);
    const auto inv = mitigate(hist, M, MitigationMethod::PlainInverse);
    CHECK(inv.values[1] < 0.0);
    const auto nn = mitigate(hist, M, MitigationMethod::NonnegativeLeastSquares);
    for (double v : nn.values) CHECK(v >= -1e-12);
  }
}

TEST_CASE("mitigated estimates beat unmitigated ones on protocol circuits") {
  // reduced-size version of the acceptance criterion: kyiv profile, 1e5
  // shots, SIMO couplings, 20 seeded trials
  const auto m = model::build_extended({1.0, 3.0, model::Variant::Extended3});
  const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Simo);
  const auto circuits = circuit::build_protocol_circuits(
      m, protocol::ProtocolVariant::Simo, angles.phi, angles.sign_convention);
  const auto profile = *find_builtin("ibm_kyiv");
  const auto M = build_calibration_matrix(profile, 3);

  for (const std::string name : {"V01", "V02"}) {
    const auto& c = circuits.deferred.at(name);
    const auto& spec = circuits.observables.at(name);
    const auto exact = circuit::simulate_exact(c);
    const double truth = circuit::estimate_observable_exact(exact.distribution, 3, spec);

    int better = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
      const auto noisy = noisy_sample(c, 100000, 9000 + t, profile);
      const double raw = circuit::estimate_observable(noisy, spec);
      const auto quasi = mitigate(noisy, M);
      const double fixed = circuit::estimate_observable_exact(quasi.clipped, 3, spec);
      if (std::abs(fixed - truth) < std::abs(raw - truth)) ++better;
    }
    CHECK(better >= 19);
  }
}
