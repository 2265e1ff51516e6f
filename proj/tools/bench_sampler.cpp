// Compares the OpenMP sampling kernel against the serial reference on a
// protocol circuit: identical histograms, wall-clock per path.
#include <chrono>
#include <cstdio>
#include <string>

#include "qet/circuit.hpp"
#include "qet/model.hpp"
#include "qet/protocol.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace qet;

int main(int argc, char** argv) {
  std::uint64_t shots = argc > 1 ? std::stoull(argv[1]) : 20'000'000ULL;
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 42;

  model::ModelParams params{1.0, 3.0, model::Variant::Extended3};
  const auto m = model::build_extended(params);
  const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Simo);
  const auto circuits = circuit::build_protocol_circuits(
      m, protocol::ProtocolVariant::Simo, angles.phi, angles.sign_convention);
  const circuit::Circuit& c = circuits.deferred.at("V02");

  const auto time_ms = [](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  circuit::ShotHistogram serial, parallel;
  const double t_serial = time_ms([&] { serial = circuit::sample_reference(c, shots, seed); });
  const double t_parallel = time_ms([&] { parallel = circuit::sample(c, shots, seed); });

  const bool identical = serial.counts == parallel.counts;
#ifdef _OPENMP
  const int threads = omp_get_max_threads();
#else
  const int threads = 1;
#endif
  std::printf("shots            : %llu\n", static_cast<unsigned long long>(shots));
  std::printf("threads          : %d\n", threads);
  std::printf("serial reference : %8.1f ms  (%.1f Mshot/s)\n", t_serial,
              double(shots) / t_serial / 1e3);
  std::printf("openmp kernel    : %8.1f ms  (%.1f Mshot/s)\n", t_parallel,
              double(shots) / t_parallel / 1e3);
  std::printf("speedup          : %.2fx\n", t_serial / t_parallel);
  std::printf("histograms match : %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
