#include "tristab/random.hpp"

#include <cmath>
#include <numbers>

namespace tristab {

using linalg::Complex;
using linalg::ComplexMatrix;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ComplexMatrix random_matrix(std::size_t dim, Rng& rng) {
  ComplexMatrix m(dim);
  for (auto& c : m.row_major()) {
    const double re = rng.uniform(-1.0, 1.0);
    const double im = rng.uniform(-1.0, 1.0);
    c = Complex{re, im};
  }
  return m;
}

ComplexMatrix random_unitary(std::size_t dim, Rng& rng) {
  ComplexMatrix m = random_matrix(dim, rng);
  // columns are orthonormalized in place; two passes restore orthogonality
  // lost to rounding
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        Complex proj{};
        for (std::size_t i = 0; i < dim; ++i) proj += std::conj(m(i, k)) * m(i, j);
        for (std::size_t i = 0; i < dim; ++i) m(i, j) -= proj * m(i, k);
      }
      double len = 0.0;
      for (std::size_t i = 0; i < dim; ++i) len += std::norm(m(i, j));
      len = std::sqrt(len);
      for (std::size_t i = 0; i < dim; ++i) m(i, j) /= len;
    }
  }
  return m;
}

ComplexMatrix random_skew_adjoint(std::size_t dim, Rng& rng, double scale) {
  const ComplexMatrix m = random_matrix(dim, rng);
  ComplexMatrix a = linalg::scalar_mul(0.5, linalg::subtract(m, linalg::adjoint(m)));
  // restore exact skew-adjointness after the subtraction
  for (std::size_t i = 0; i < dim; ++i) {
    a(i, i) = Complex{0.0, a(i, i).imag()};
    for (std::size_t j = i + 1; j < dim; ++j) a(j, i) = -std::conj(a(i, j));
  }
  const double len = linalg::norm(a);
  if (len > 0.0) a *= scale / len;
  return a;
}

std::vector<ComplexMatrix> make_probes(std::size_t dim, std::size_t count, std::uint64_t seed,
                                       double min_norm, double max_norm) {
  Rng rng(seed);
  std::vector<ComplexMatrix> probes;
  probes.reserve(count);
  const double lo = std::log10(min_norm);
  const double hi = std::log10(max_norm);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 0.5;
    const double target = std::pow(10.0, lo + t * (hi - lo));
    ComplexMatrix x = random_matrix(dim, rng);
    double len = linalg::norm(x);
    while (len == 0.0) {
      x = random_matrix(dim, rng);
      len = linalg::norm(x);
    }
    x *= target / len;
    probes.push_back(std::move(x));
  }
  return probes;
}

std::vector<Complex> unimodular_samples(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(std::polar(1.0, rng.uniform(-std::numbers::pi, std::numbers::pi)));
  }
  return out;
}

}  // namespace tristab
