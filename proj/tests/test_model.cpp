#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qet/model.hpp"

using namespace qet;
using doctest::Approx;

namespace {

model::ModelInstance minimal(double h, double k) {
  return model::build_minimal({h, k, model::Variant::Minimal2});
}

model::ModelInstance extended(double h, double k) {
  return model::build_extended({h, k, model::Variant::Extended3});
}

void check_instance_invariants(const model::ModelInstance& m) {
  CHECK(std::abs(expectation(m.ground, m.total)) < 1e-9);
  for (const auto& t : m.locals) CHECK(std::abs(expectation(m.ground, t.op)) < 1e-9);
  for (const auto& t : m.couplings) CHECK(std::abs(expectation(m.ground, t.op)) < 1e-9);

  Matrix sum(m.total.dim());
  for (const auto& t : m.locals) sum += t.op;
  for (const auto& t : m.couplings) sum += t.op;
  CHECK(Matrix::max_abs_diff(sum, m.total) < 1e-12);

  CHECK(std::abs(eigh(m.total).eigenvalues.front()) < 1e-9);
}

}  // namespace

TEST_CASE("minimal model matches its closed-form construction") {
  const double h = 1.0, k = 1.5;
  const auto m = minimal(h, k);

  const double offset = h * h / std::sqrt(h * h + k * k);
  CHECK(m.local(0).offset == Approx(offset).epsilon(1e-12));
  CHECK(m.local(1).offset == Approx(offset).epsilon(1e-12));
  CHECK(offset == Approx(0.5547001962252291));
  CHECK(m.coupling(0, 1).offset == Approx(2 * k * k / std::sqrt(h * h + k * k)).epsilon(1e-12));

  // <g|Z0|g> = alpha^2 - beta^2 = -h/sqrt(h^2+k^2) from the printed amplitudes
  const double z0 = expectation(m.ground, embed(pauli_z(), {0}, 2));
  CHECK(z0 == Approx(-0.5547001962252291).epsilon(1e-9));

  check_instance_invariants(m);
}

TEST_CASE("analytic minimal ground state") {
  SUBCASE("symmetric limit h -> 0") {
    const auto g = model::analytic_ground_minimal({1e-9, 1.0, model::Variant::Minimal2});
    CHECK(g[0].real() == Approx(1 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(g[3].real() == Approx(-1 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(std::abs(g[1]) == 0.0);
    CHECK(std::abs(g[2]) == 0.0);
  }
  SUBCASE("norm is exactly 1") {
    const auto g = model::analytic_ground_minimal({1.0, 1.5, model::Variant::Minimal2});
    CHECK(g.norm() == Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("cross-validation against the eigensolver") {
    for (const auto& [h, k] : {std::pair{1.0, 1.5}, {1.5, 1.0}, {0.3, 2.0}, {4.0, 0.5}}) {
      const auto analytic = model::analytic_ground_minimal({h, k, model::Variant::Minimal2});
      const auto m = minimal(h, k);
      CHECK(std::abs(StateVector::inner(analytic, m.ground)) == Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("extended model ground state and offsets") {
  const auto m = extended(1.0, 4.0);

  // even-parity amplitudes vanish
  for (std::size_t i : {0u, 3u, 5u, 6u}) CHECK(std::abs(m.ground[i]) < 1e-9);

  // Alice's deposit equals the local offset; published analytic value 0.772
  const double c0 = -expectation(m.ground, embed(pauli_z(), {0}, 3));
  CHECK(c0 == Approx(m.local(0).offset).epsilon(1e-12));
  CHECK(m.local(0).offset == Approx(0.769769113805).epsilon(1e-9));
  CHECK(std::abs(m.local(0).offset - 0.772) < 0.01);

  // independent power-iteration oracle agrees with the Jacobi path
  Matrix traceless(8);
  for (int s = 0; s < 3; ++s) traceless += embed(pauli_z(), {s}, 3);
  for (const auto& [i, j] : {std::pair{0, 1}, {1, 2}, {0, 2}})
    traceless += embed(kron(pauli_x(), pauli_x()), {i, j}, 3) * Complex{4.0, 0};
  const auto [e0, g_oracle] = oracles::power_iteration_ground(traceless);
  CHECK(std::abs(StateVector::inner(g_oracle, m.ground)) == Approx(1.0).epsilon(1e-9));
  CHECK(-e0 == Approx(model::total_offset(m)).epsilon(1e-9));

  check_instance_invariants(m);
}

TEST_CASE("offset sum equals minus the traceless ground energy") {
  const auto m = extended(1.0, 3.0);
  const double min_eig = eigh(m.total).eigenvalues.front();
  CHECK(min_eig == Approx(0.0).epsilon(1e-9));
  check_instance_invariants(m);
}

TEST_CASE("model invariants over the parameter grid") {
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double h = 0.2 + i * (5.0 - 0.2) / 9.0;
      const double k = 0.2 + j * (5.0 - 0.2) / 9.0;
      check_instance_invariants(minimal(h, k));
      check_instance_invariants(extended(h, k));
    }
  }
}

TEST_CASE("minimal ground state fidelity with the printed amplitudes over the grid") {
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double h = 0.2 + i * (5.0 - 0.2) / 9.0;
      const double k = 0.2 + j * (5.0 - 0.2) / 9.0;
      const auto m = minimal(h, k);
      const auto analytic = model::analytic_ground_minimal({h, k, model::Variant::Minimal2});
      CHECK(std::abs(StateVector::inner(analytic, m.ground)) >= 1.0 - 1e-9);
    }
}

TEST_CASE("extended Hamiltonian parity symmetry") {
  // The symmetry protecting the odd-population sector is the Z parity
  // operator: it commutes with every coupling (two sign flips) and with
  // every local Z term. The global X flip instead anticommutes with the
  // local terms and maps the model to (-h, k).
  for (const auto& [h, k] : {std::pair{1.0, 4.0}, {1.0, 3.0}, {2.5, 0.7}}) {
    const auto m = extended(h, k);
    const Matrix zparity = embed(pauli_z(), {0}, 3) * embed(pauli_z(), {1}, 3) *
                           embed(pauli_z(), {2}, 3);
    const Matrix comm = m.total * zparity - zparity * m.total;
    CHECK(comm.max_abs() < 1e-10);

    const Matrix flip = embed(pauli_x(), {0}, 3) * embed(pauli_x(), {1}, 3) *
                        embed(pauli_x(), {2}, 3);
    Matrix reflected(8);  // traceless part with h -> -h, offsets unchanged
    for (const auto& t : m.locals)
      reflected += embed(pauli_z(), {t.site}, 3) * Complex{-h, 0} +
                   Matrix::identity(8) * Complex{t.offset, 0};
    for (const auto& t : m.couplings)
      reflected +=
          embed(kron(pauli_x(), pauli_x()), {t.sites.first, t.sites.second}, 3) *
              Complex{k, 0} +
          Matrix::identity(8) * Complex{t.offset, 0};
    CHECK(Matrix::max_abs_diff(flip * m.total * flip, reflected) < 1e-10);
  }
}

TEST_CASE("extended ground state keeps odd-parity support over the grid") {
  // logged observation backing the state-prep circuit's target family
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double h = 0.2 + i * (5.0 - 0.2) / 9.0;
      const double k = 0.2 + j * (5.0 - 0.2) / 9.0;
      const auto m = extended(h, k);
      for (std::size_t idx : {0u, 3u, 5u, 6u}) CHECK(std::abs(m.ground[idx]) < 1e-9);
    }
}

TEST_CASE("closed-form coefficient diagnostics") {
  SUBCASE("K at the published parameter sets") {
    const auto cf14 = model::closed_form_coefficients({1.0, 4.0, model::Variant::Extended3});
    CHECK(cf14.K == Approx(std::sqrt(21.0)).epsilon(1e-12));
    const auto cf11 = model::closed_form_coefficients({1.0, 1.0, model::Variant::Extended3});
    CHECK(cf11.K == Approx(std::sqrt(3.0)).epsilon(1e-12));
  }
  SUBCASE("residual vanishes at the root and L matches the numeric offset") {
    const auto cf = model::closed_form_coefficients({1.0, 4.0, model::Variant::Extended3});
    REQUIRE(cf.available);
    CHECK(cf.residual < 1e-9);
    const auto m = extended(1.0, 4.0);
    // with the auxiliary coefficient read as h, the closed forms land on
    // the numeric construction
    CHECK(cf.L == Approx(m.local(0).offset).epsilon(1e-9));
    CHECK(cf.x / (3 * (2 * cf.K + 1.0 - 4.0)) == Approx(m.coupling(0, 1).offset).epsilon(1e-9));
  }
  SUBCASE("amplitude-ratio diagnostic against the eigensolver state") {
    for (const auto& [h, k] : {std::pair{1.0, 4.0}, {1.0, 3.0}}) {
      const auto cf = model::closed_form_coefficients({h, k, model::Variant::Extended3});
      REQUIRE(cf.available);
      const auto m = extended(h, k);
      const double anchor = std::abs(m.ground[7]);
      // pattern (M3, M2, M1, 1) at (001, 010, 100, 111); comparison is
      // diagnostic output, printed rather than gated
      MESSAGE("(h,k)=(", h, ",", k, ") |a001|/|a111|=", std::abs(m.ground[1]) / anchor,
              " vs M3=", cf.M3, "; |a010|/|a111|=", std::abs(m.ground[2]) / anchor,
              " vs M2=", cf.M2, "; |a100|/|a111|=", std::abs(m.ground[4]) / anchor,
              " vs M1=", cf.M1);
      CHECK(std::isfinite(cf.M1));
      CHECK(std::isfinite(cf.M2));
      CHECK(std::isfinite(cf.M3));
    }
  }
}

TEST_CASE("protocol angles for the minimal model") {
  const double h = 1.0, k = 1.5;
  const auto m = minimal(h, k);
  const auto angles = model::compute_angles(m, 0, 1);

  // Pauli conjugation collapses xi to (2h^2 + 4k^2)/sqrt(h^2+k^2) and the
  // commutator algebra gives eta = 2hk/sqrt(h^2+k^2)
  const double root = std::sqrt(h * h + k * k);
  CHECK(angles.xi == Approx((2 * h * h + 4 * k * k) / root).epsilon(1e-9));
  CHECK(angles.eta == Approx(2 * h * k / root).epsilon(1e-9));
  CHECK(angles.eta == Approx(1.6641005886756874).epsilon(1e-9));

  // phi reproduces sin(2 phi) = hk / sqrt((h^2+2k^2)^2 + h^2 k^2)
  const double printed = h * k / std::sqrt(std::pow(h * h + 2 * k * k, 2) + h * h * k * k);
  CHECK(std::sin(2 * angles.phi) == Approx(printed).epsilon(1e-9));

  CHECK(std::cos(2 * angles.phi) ==
        Approx(angles.xi / std::hypot(angles.xi, angles.eta)).epsilon(1e-9));
  CHECK(angles.phi >= 0.0);
  CHECK(angles.phi <= std::acos(-1.0) / 2);
}

TEST_CASE("extended angles: both senders give the same eta") {
  const auto m = extended(1.0, 4.0);
  const auto a0 = model::compute_angles(m, 0, 2);
  const auto a1 = model::compute_angles(m, 1, 2);
  CHECK(a0.eta == Approx(a1.eta).epsilon(1e-9));
  CHECK(a0.xi == Approx(a1.xi).epsilon(1e-9));
}

TEST_CASE("angles: offset shift moves xi, leaves eta") {
  const auto m = extended(1.0, 3.0);
  const auto full = model::compute_angles(m, 0, 2);

  // a model copy whose total is just the traceless part
  model::ModelInstance traceless = m;
  traceless.total = Matrix(8);
  for (const auto& t : m.locals)
    traceless.total += embed(pauli_z(), {t.site}, 3) * Complex{m.params.h, 0};
  for (const auto& t : m.couplings)
    traceless.total +=
        embed(kron(pauli_x(), pauli_x()), {t.sites.first, t.sites.second}, 3) *
        Complex{m.params.k, 0};
  const auto bare = model::compute_angles(traceless, 0, 2);

  CHECK(full.xi - bare.xi == Approx(model::total_offset(m)).epsilon(1e-10));
  CHECK(full.eta == Approx(bare.eta).epsilon(1e-10));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(model::build_minimal({-1.0, 1.0, model::Variant::Minimal2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model::build_minimal({1.0, 1.0, model::Variant::Extended3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model::build_extended({1.0, 0.0, model::Variant::Extended3}),
                  std::invalid_argument);
  const auto m = minimal(1.0, 1.5);
  CHECK_THROWS_AS(model::compute_angles(m, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(model::compute_angles(m, 0, 5), std::invalid_argument);
}
