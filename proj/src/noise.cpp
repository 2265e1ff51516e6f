#include "qet/noise.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qet/rng.hpp"

namespace qet::noise {

double ReadoutProfile::p10(int q) const {
  if (q < 0 || q >= static_cast<int>(qubits.size()))
    throw std::invalid_argument("profile has no qubit " + std::to_string(q));
  const QubitCalibration& c = qubits[q];
  return c.p10_override >= 0 ? c.p10_override : c.readout_error;
}

double ReadoutProfile::p01(int q) const {
  if (q < 0 || q >= static_cast<int>(qubits.size()))
    throw std::invalid_argument("profile has no qubit " + std::to_string(q));
  const QubitCalibration& c = qubits[q];
  return c.p01_override >= 0 ? c.p01_override : c.readout_error;
}

//=========================================================================
// Bundled profiles (published device calibration tables)
//=========================================================================

const std::vector<ReadoutProfile>& builtin_profiles() {
  static const std::vector<ReadoutProfile> profiles = {
      {"ibm_kyiv",
       {{240.6, 300.7, 4.656, 6.800e-3},
        {456.53, 210.99, 4.535, 2.800e-3},
        {118.61, 87.21, 4.68, 5.900e-3},
        {253.51, 159.27, 4.607, 5.800e-3}},
       0.0},
      {"ibm_sherbrooke",
       {{427.97, 107.97, 4.636, 1.580e-2},
        {310.73, 325.86, 4.736, 1.820e-2},
        {265.62, 187.5, 4.819, 1.820e-2},
        {315.87, 171.31, 4.747, 1.180e-2}},
       0.0},
      {"ibm_brisbane",
       {{325.43, 292.43, 4.832, 1.550e-2},
        {354.78, 295.86, 4.972, 1.343e-1},
        {350.0, 158.02, 4.934, 1.650e-2},
        {307.89, 129.35, 5.006, 1.230e-2}},
       0.0},
  };
  return profiles;
}

std::optional<ReadoutProfile> find_builtin(const std::string& label) {
  for (const ReadoutProfile& p : builtin_profiles())
    if (p.label == label) return p;
  return std::nullopt;
}

//=========================================================================
// Profile file format
//=========================================================================

ReadoutProfile parse_profile(std::istream& in) {
  ReadoutProfile p;
  std::string line;
  bool saw_label = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "label:") {
      ls >> p.label;
      saw_label = true;
    } else if (head == "depolarizing:") {
      ls >> p.depolarizing;
      if (p.depolarizing < 0 || p.depolarizing > 1)
        throw std::invalid_argument("depolarizing must be within [0, 1]");
    } else if (head == "qubit") {
      int index = -1;
      ls >> index;
      std::string colon;
      ls >> colon;
      QubitCalibration q;
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("malformed qubit field: " + kv);
        const std::string key = kv.substr(0, eq);
        const double val = std::stod(kv.substr(eq + 1));
        if (key == "t1_us") q.t1_us = val;
        else if (key == "t2_us") q.t2_us = val;
        else if (key == "frequency_ghz") q.frequency_ghz = val;
        else if (key == "readout_error") q.readout_error = val;
        else if (key == "p10") q.p10_override = val;
        else if (key == "p01") q.p01_override = val;
        else throw std::invalid_argument("unknown qubit field: " + key);
      }
      if (index != static_cast<int>(p.qubits.size()))
        throw std::invalid_argument("qubit records must be listed in order");
      for (double prob : {q.readout_error, std::max(q.p10_override, 0.0),
                          std::max(q.p01_override, 0.0)})
        if (prob < 0 || prob > 0.5)
          throw std::invalid_argument("readout probabilities must be within [0, 0.5]");
      p.qubits.push_back(q);
    } else {
      throw std::invalid_argument("unknown profile line: " + line);
    }
  }
  if (!saw_label || p.qubits.empty())
    throw std::invalid_argument("profile needs a label and at least one qubit record");
  return p;
}

std::string serialize_profile(const ReadoutProfile& p) {
  std::ostringstream out;
  out << "label: " << p.label << "\n";
  if (p.depolarizing > 0) out << "depolarizing: " << p.depolarizing << "\n";
  char buf[160];
  for (std::size_t i = 0; i < p.qubits.size(); ++i) {
    const QubitCalibration& q = p.qubits[i];
    std::snprintf(buf, sizeof buf,
                  "qubit %zu : t1_us=%g t2_us=%g frequency_ghz=%g readout_error=%g", i,
                  q.t1_us, q.t2_us, q.frequency_ghz, q.readout_error);
    out << buf;
    if (q.p10_override >= 0) out << " p10=" << q.p10_override;
    if (q.p01_override >= 0) out << " p01=" << q.p01_override;
    out << "\n";
  }
  return out.str();
}

ReadoutProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile file: " + path);
  return parse_profile(in);
}

//=========================================================================
// Calibration matrices
//=========================================================================

CalibrationMatrix build_calibration_matrix(const ReadoutProfile& p, int n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("need at least one qubit");
  const std::size_t dim = std::size_t{1} << n_qubits;
  CalibrationMatrix M;
  M.dim = dim;
  M.entries.assign(dim * dim, 0.0);
  for (std::size_t observed = 0; observed < dim; ++observed) {
    for (std::size_t truth = 0; truth < dim; ++truth) {
      double v = 1.0;
      for (int q = 0; q < n_qubits; ++q) {
        const int to = (observed >> (n_qubits - 1 - q)) & 1;
        const int tt = (truth >> (n_qubits - 1 - q)) & 1;
        if (tt == 0)
          v *= to == 0 ? 1.0 - p.p10(q) : p.p10(q);
        else
          v *= to == 1 ? 1.0 - p.p01(q) : p.p01(q);
      }
      M.at(observed, truth) = v;
    }
  }
  return M;
}

CalibrationMatrix estimate_calibration_matrix(const ReadoutProfile& p, int n_qubits,
                                              std::uint64_t shots, std::uint64_t seed) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  CalibrationMatrix M;
  M.dim = dim;
  M.entries.assign(dim * dim, 0.0);
  for (std::size_t truth = 0; truth < dim; ++truth) {
    circuit::Circuit prep(n_qubits, n_qubits);
    for (int q = 0; q < n_qubits; ++q)
      if ((truth >> (n_qubits - 1 - q)) & 1) prep.append(circuit::Gate::pauli_x(q));
    for (int q = 0; q < n_qubits; ++q) prep.append(circuit::Gate::measure_z(q, q));

    if (shots == 0) {
      // infinite-shot proxy: exact distribution through the exact channel
      const auto exact = circuit::simulate_exact(prep);
      const auto noisy = apply_readout_noise(exact.distribution, p, n_qubits);
      for (std::size_t i = 0; i < dim; ++i) M.at(i, truth) = noisy[i];
    } else {
      const auto hist = noisy_sample(prep, shots, seed + truth, p);
      for (const auto& [key, count] : hist.counts) {
        std::size_t i = 0;
        for (int b = 0; b < n_qubits; ++b)
          i |= std::size_t{key[b] == '1'} << (n_qubits - 1 - b);
        M.at(i, truth) = double(count) / double(shots);
      }
    }
  }
  return M;
}

//=========================================================================
// Channel application
//=========================================================================

std::vector<double> apply_readout_noise(const std::vector<double>& distribution,
                                        const ReadoutProfile& p, int width) {
  if (distribution.size() != (std::size_t{1} << width))
    throw std::invalid_argument("distribution width mismatch");
  if (static_cast<int>(p.qubits.size()) < width)
    throw std::invalid_argument("profile has fewer qubits than the bit-string width");
  const CalibrationMatrix M = build_calibration_matrix(p, width);
  std::vector<double> out(distribution.size(), 0.0);
  for (std::size_t i = 0; i < M.dim; ++i)
    for (std::size_t j = 0; j < M.dim; ++j) out[i] += M.at(i, j) * distribution[j];
  return out;
}

circuit::ShotHistogram apply_readout_noise(const circuit::ShotHistogram& hist,
                                           const ReadoutProfile& p, std::uint64_t seed) {
  if (static_cast<int>(p.qubits.size()) < hist.width)
    throw std::invalid_argument("profile has fewer qubits than the bit-string width");
  circuit::ShotHistogram out;
  out.shots = hist.shots;
  out.seed = seed;
  out.width = hist.width;
  std::uint64_t shot_index = 0;  // global, map order is deterministic
  for (const auto& [key, count] : hist.counts) {
    for (std::uint64_t s = 0; s < count; ++s, ++shot_index) {
      std::string flipped = key;
      if (p.depolarizing > 0.0 &&
          CounterRng::uniform(seed, 0xDE90u, shot_index) < p.depolarizing) {
        // global white-noise knob: the outcome is replaced by a uniform one
        const std::uint64_t w = CounterRng::word(seed, 0xDE91u, shot_index);
        for (int q = 0; q < hist.width; ++q)
          flipped[q] = (w >> q) & 1 ? '1' : '0';
      }
      for (int q = 0; q < hist.width; ++q) {
        const double u =
            CounterRng::uniform(seed, 0xF11Au ^ (std::uint64_t(q) << 32), shot_index);
        const bool one = flipped[q] == '1';
        const double flip_prob = one ? p.p01(q) : p.p10(q);
        if (u < flip_prob) flipped[q] = one ? '0' : '1';
      }
      ++out.counts[flipped];
    }
  }
  return out;
}

circuit::ShotHistogram noisy_sample(const circuit::Circuit& c, std::uint64_t shots,
                                    std::uint64_t seed, const ReadoutProfile& p) {
  return apply_readout_noise(circuit::sample(c, shots, seed), p, seed ^ 0x5eedu);
}

//=========================================================================
// Mitigation
//=========================================================================

namespace {

void check_invertible(const CalibrationMatrix& M) {
  // Rank check by elimination; the tensor-product channel loses rank
  // exactly when some qubit has p10 + p01 >= 1.
  const std::size_t n = M.dim;
  std::vector<double> a(M.entries);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-12)
      throw std::domain_error("calibration matrix is singular (p10 + p01 too large)");
    if (piv != col)
      for (std::size_t j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
    }
  }
}

// Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(const CalibrationMatrix& M, std::vector<double> b) {
  const std::size_t n = M.dim;
  std::vector<double> a(M.entries);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-12)
      throw std::domain_error("calibration matrix is singular (p10 + p01 too large)");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

// Lawson-Hanson nonnegative least squares; dimensions here are at most 8.
std::vector<double> nnls(const CalibrationMatrix& M, const std::vector<double>& b) {
  const std::size_t n = M.dim;
  std::vector<bool> passive(n, false);
  std::vector<double> x(n, 0.0);

  const auto residual_gradient = [&]() {
    std::vector<double> r(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = 0;
      for (std::size_t j = 0; j < n; ++j) mx += M.at(i, j) * x[j];
      r[i] = b[i] - mx;
    }
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) w[j] += M.at(i, j) * r[i];
    return w;
  };

  // Least squares restricted to the passive set via normal equations.
  const auto solve_passive = [&]() {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    const std::size_t m = idx.size();
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t c = 0; c < m; ++c)
        for (std::size_t i = 0; i < n; ++i)
          ata[a * m + c] += M.at(i, idx[a]) * M.at(i, idx[c]);
      for (std::size_t i = 0; i < n; ++i) atb[a] += M.at(i, idx[a]) * b[i];
    }
    // solve ata z = atb (tiny SPD system)
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m; ++r)
        if (std::abs(ata[r * m + col]) > std::abs(ata[piv * m + col])) piv = r;
      if (std::abs(ata[piv * m + col]) < 1e-14)
        throw std::domain_error("calibration matrix is singular (p10 + p01 too large)");
      if (piv != col) {
        for (std::size_t j = 0; j < m; ++j) std::swap(ata[piv * m + j], ata[col * m + j]);
        std::swap(atb[piv], atb[col]);
      }
      for (std::size_t r = col + 1; r < m; ++r) {
        const double f = ata[r * m + col] / ata[col * m + col];
        if (f == 0) continue;
        for (std::size_t j = col; j < m; ++j) ata[r * m + j] -= f * ata[col * m + j];
        atb[r] -= f * atb[col];
      }
    }
    std::vector<double> z(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
      double s = atb[i];
      for (std::size_t j = i + 1; j < m; ++j) s -= ata[i * m + j] * z[j];
      z[i] = s / ata[i * m + i];
    }
    std::vector<double> full(n, 0.0);
    for (std::size_t a = 0; a < m; ++a) full[idx[a]] = z[a];
    return full;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(n); ++outer) {
    const auto w = residual_gradient();
    std::size_t best = n;
    double best_w = 1e-10;
    for (std::size_t j = 0; j < n; ++j)
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    if (best == n) break;
    passive[best] = true;

    auto z = solve_passive();
    for (int inner = 0; inner < 3 * static_cast<int>(n); ++inner) {
      double alpha = 1.0;
      bool any_nonpositive = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (!passive[j] || z[j] > 1e-14) continue;
        any_nonpositive = true;
        const double a = x[j] / (x[j] - z[j]);
        alpha = std::min(alpha, a);
      }
      if (!any_nonpositive) break;
      for (std::size_t j = 0; j < n; ++j)
        if (passive[j]) x[j] += alpha * (z[j] - x[j]);
      for (std::size_t j = 0; j < n; ++j)
        if (passive[j] && x[j] <= 1e-14) {
          passive[j] = false;
          x[j] = 0.0;
        }
      z = solve_passive();
    }
    x = z;
  }
  return x;
}

}  // namespace

QuasiDistribution mitigate_distribution(const std::vector<double>& empirical,
                                        const CalibrationMatrix& M,
                                        MitigationMethod method) {
  if (empirical.size() != M.dim)
    throw std::invalid_argument("mitigation dimension mismatch");
  check_invertible(M);

  QuasiDistribution out;
  if (method == MitigationMethod::NonnegativeLeastSquares) {
    out.values = nnls(M, empirical);
  } else {
    out.values = solve_linear(M, empirical);
  }
  out.clipped = out.values;
  double total = 0;
  for (double& v : out.clipped) {
    if (v < 0) v = 0;
    total += v;
  }
  if (total <= 0) throw std::domain_error("mitigated distribution vanished");
  for (double& v : out.clipped) v /= total;
  return out;
}

QuasiDistribution mitigate(const circuit::ShotHistogram& hist, const CalibrationMatrix& M,
                           MitigationMethod method) {
  if (hist.shots == 0) throw std::invalid_argument("empty histogram");
  std::vector<double> empirical(M.dim, 0.0);
  for (const auto& [key, count] : hist.counts) {
    if (static_cast<std::size_t>(hist.width) != 0 &&
        (std::size_t{1} << hist.width) != M.dim)
      throw std::invalid_argument("mitigation dimension mismatch");
    std::size_t i = 0;
    for (int b = 0; b < hist.width; ++b)
      i |= std::size_t{key[b] == '1'} << (hist.width - 1 - b);
    empirical[i] = double(count) / double(hist.shots);
  }
  return mitigate_distribution(empirical, M, method);
}

}  // namespace qet::noise
