#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qet/circuit.hpp"

namespace qet::noise {

struct QubitCalibration {
  double t1_us = 0;
  double t2_us = 0;
  double frequency_ghz = 0;
  double readout_error = 0;  // symmetric flip probability
  // Asymmetric overrides; negative means "use readout_error".
  double p10_override = -1;  // P(read 1 | prepared 0)
  double p01_override = -1;  // P(read 0 | prepared 1)
};

// Per-qubit readout flip probabilities plus the device metadata they were
// published with. The published tables give one error rate per qubit, so
// the bundled profiles use a symmetric channel (p10 = p01); custom profiles
// may override either direction. T1/T2/frequency are carried for
// documentation only; the optional depolarizing knob defaults to off.
struct ReadoutProfile {
  std::string label;
  std::vector<QubitCalibration> qubits;
  double depolarizing = 0.0;

  double p10(int q) const;  // P(read 1 | prepared 0)
  double p01(int q) const;  // P(read 0 | prepared 1)
};

// Profiles built from the published calibration tables of ibm_kyiv,
// ibm_sherbrooke and ibm_brisbane.
const std::vector<ReadoutProfile>& builtin_profiles();
std::optional<ReadoutProfile> find_builtin(const std::string& label);

// Human-editable key-value document, one record per backend.
ReadoutProfile parse_profile(std::istream& in);
std::string serialize_profile(const ReadoutProfile& p);
ReadoutProfile load_profile_file(const std::string& path);

// Column-stochastic confusion matrix over bit strings: column j is the
// observed distribution when basis state j is prepared.
struct CalibrationMatrix {
  std::size_t dim = 0;
  std::vector<double> entries;  // row-major
  double& at(std::size_t i, std::size_t j) { return entries[i * dim + j]; }
  double at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
};

// Analytic tensor product of the per-qubit 2x2 confusion blocks
// [[1-p10, p01], [p10, 1-p01]].
CalibrationMatrix build_calibration_matrix(const ReadoutProfile& p, int n_qubits);

// Runs the 2^n basis-state preparation circuits through the noisy sampler
// and collects empirical columns. shots == 0 uses the exact distributions
// (the infinite-shot proxy) and reproduces the analytic matrix.
CalibrationMatrix estimate_calibration_matrix(const ReadoutProfile& p, int n_qubits,
                                              std::uint64_t shots, std::uint64_t seed);

// Exact confusion applied to a distribution (M p).
std::vector<double> apply_readout_noise(const std::vector<double>& distribution,
                                        const ReadoutProfile& p, int width);

// Flips each recorded shot's bits independently with the profile's
// probabilities; seeded and deterministic, preserves the shot count.
circuit::ShotHistogram apply_readout_noise(const circuit::ShotHistogram& hist,
                                           const ReadoutProfile& p, std::uint64_t seed);

// Convenience: sample a circuit and push the shots through the channel.
circuit::ShotHistogram noisy_sample(const circuit::Circuit& c, std::uint64_t shots,
                                    std::uint64_t seed, const ReadoutProfile& p);

struct QuasiDistribution {
  std::vector<double> values;   // solver output; may be negative for the inverse path
  std::vector<double> clipped;  // nonnegative, normalized
};

enum class MitigationMethod { NonnegativeLeastSquares, PlainInverse };

// Solves M p = empirical distribution. The default solver is nonnegative
// least squares; the plain-inverse path (clip negatives, renormalize) is
// kept behind the method flag for comparison. Throws when the channel is
// singular (p10 + p01 >= 1 on some qubit).
QuasiDistribution mitigate(const circuit::ShotHistogram& hist, const CalibrationMatrix& M,
                           MitigationMethod method = MitigationMethod::NonnegativeLeastSquares);
QuasiDistribution mitigate_distribution(const std::vector<double>& empirical,
                                        const CalibrationMatrix& M,
                                        MitigationMethod method);

}  // namespace qet::noise
