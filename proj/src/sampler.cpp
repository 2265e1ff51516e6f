#include <algorithm>
#include <cstdint>

#include "qet/circuit.hpp"
#include "qet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qet::circuit {

namespace {

std::vector<double> cumulative(const std::vector<double>& dist) {
  std::vector<double> cdf(dist.size());
  double acc = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    cdf[i] = acc;
  }
  // guard the top against rounding so u ~ 1 never falls off the table
  if (!cdf.empty()) cdf.back() = std::max(cdf.back(), 1.0);
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, double u) {
  return std::size_t(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

ShotHistogram counts_to_histogram(const std::vector<std::uint64_t>& counts, int width,
                                  std::uint64_t shots, std::uint64_t seed) {
  ShotHistogram hist;
  hist.shots = shots;
  hist.seed = seed;
  hist.width = width;
  for (std::size_t pattern = 0; pattern < counts.size(); ++pattern) {
    if (counts[pattern] == 0) continue;
    std::string key(width, '0');
    for (int b = 0; b < width; ++b)
      if (pattern & (std::size_t{1} << (width - 1 - b))) key[b] = '1';
    hist.counts.emplace(std::move(key), counts[pattern]);
  }
  return hist;
}

}  // namespace

std::vector<std::uint64_t> sample_counts(const std::vector<double>& distribution,
                                         std::uint64_t shots, std::uint64_t seed,
                                         std::uint64_t stream, bool parallel) {
  const std::vector<double> cdf = cumulative(distribution);
  std::vector<std::uint64_t> counts(distribution.size(), 0);

#ifdef _OPENMP
  if (parallel) {
    #pragma omp parallel
    {
      std::vector<std::uint64_t> local(distribution.size(), 0);
      #pragma omp for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(shots); ++i)
        ++local[draw(cdf, CounterRng::uniform(seed, stream, std::uint64_t(i)))];
      #pragma omp critical
      for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += local[j];
    }
    return counts;
  }
#else
  (void)parallel;
#endif
  for (std::uint64_t i = 0; i < shots; ++i)
    ++counts[draw(cdf, CounterRng::uniform(seed, stream, i))];
  return counts;
}

ShotHistogram sample(const Circuit& c, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample requires at least one shot");
  const ExactResult exact = simulate_exact(c);
  const auto counts =
      sample_counts(exact.distribution, shots, seed, circuit_hash(c), /*parallel=*/true);
  return counts_to_histogram(counts, c.n_classical_bits, shots, seed);
}

ShotHistogram sample_reference(const Circuit& c, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample requires at least one shot");
  const ExactResult exact = simulate_exact(c);
  const auto counts =
      sample_counts(exact.distribution, shots, seed, circuit_hash(c), /*parallel=*/false);
  return counts_to_histogram(counts, c.n_classical_bits, shots, seed);
}

}  // namespace qet::circuit
