#ifndef TRISTAB_RANDOM_HPP
#define TRISTAB_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "tristab/linalg.hpp"

namespace tristab {

/// Sub-seed for an independent stream, derived with splitmix64 from the
/// experiment seed. The same (seed, stream) pair always yields the same value.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Named streams used by the experiment runner.
enum class SeedStream : std::uint64_t {
  kGenerator = 1,
  kPerturbF = 2,
  kPerturbH = 3,
  kProbes = 4,
  kUnimodular = 5,
  kAxioms = 6,
  kCertification = 7,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) noexcept {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

/// mt19937_64 with platform-independent uniform doubles (53-bit mantissa
/// from the raw engine output; no std::uniform_real_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double unit() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * unit(); }
  std::uint64_t next() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Entries with real and imaginary parts uniform in [-1, 1].
linalg::ComplexMatrix random_matrix(std::size_t dim, Rng& rng);

/// Unitary from modified Gram-Schmidt (applied twice) on a random matrix.
linalg::ComplexMatrix random_unitary(std::size_t dim, Rng& rng);

/// Skew-adjoint a = (m - m*)/2 rescaled to spectral norm `scale`.
linalg::ComplexMatrix random_skew_adjoint(std::size_t dim, Rng& rng, double scale = 1.0);

/// `count` random matrices whose spectral norms are log-spaced over
/// [min_norm, max_norm]. A single probe gets the geometric mean.
std::vector<linalg::ComplexMatrix> make_probes(std::size_t dim, std::size_t count,
                                               std::uint64_t seed, double min_norm = 1e-2,
                                               double max_norm = 1e1);

/// Uniformly random points on the unit circle.
std::vector<linalg::Complex> unimodular_samples(std::size_t count, std::uint64_t seed);

}  // namespace tristab

#endif  // TRISTAB_RANDOM_HPP
