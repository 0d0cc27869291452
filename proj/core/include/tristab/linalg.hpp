#ifndef TRISTAB_LINALG_HPP
#define TRISTAB_LINALG_HPP

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tristab::linalg {

using Complex = std::complex<double>;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(std::string_view op, std::size_t lhs, std::size_t rhs);
};

/// Thrown by spectral_norm when power iteration runs out of iterations.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(double last_estimate, int iterations);
  double last_estimate() const noexcept { return last_estimate_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_estimate_;
  int iterations_;
};

/// Dense square complex matrix, stored row-major.
///
/// Indices are zero-based: `unit(n, 0, 1)` is the matrix unit usually
/// written e12.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(std::size_t dim);
  ComplexMatrix(std::size_t dim, std::vector<Complex> row_major);
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

  static ComplexMatrix zero(std::size_t dim) { return ComplexMatrix(dim); }
  static ComplexMatrix identity(std::size_t dim);
  static ComplexMatrix unit(std::size_t dim, std::size_t row, std::size_t col);
  static ComplexMatrix diagonal(std::span<const Complex> values);
  static ComplexMatrix diagonal(std::initializer_list<Complex> values);

  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return dim_ == 0; }

  Complex& operator()(std::size_t row, std::size_t col) { return data_[row * dim_ + col]; }
  const Complex& operator()(std::size_t row, std::size_t col) const {
    return data_[row * dim_ + col];
  }

  std::span<const Complex> row_major() const noexcept { return data_; }
  std::span<Complex> row_major() noexcept { return data_; }

  bool is_finite() const noexcept;

  ComplexMatrix& operator+=(const ComplexMatrix& rhs);
  ComplexMatrix& operator-=(const ComplexMatrix& rhs);
  ComplexMatrix& operator*=(Complex scalar) noexcept;

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Complex> data_;
};

ComplexMatrix add(const ComplexMatrix& x, const ComplexMatrix& y);
ComplexMatrix subtract(const ComplexMatrix& x, const ComplexMatrix& y);
ComplexMatrix scalar_mul(Complex lambda, const ComplexMatrix& x);
ComplexMatrix matmul(const ComplexMatrix& x, const ComplexMatrix& y);
/// Conjugate transpose.
ComplexMatrix adjoint(const ComplexMatrix& x);

inline ComplexMatrix operator+(const ComplexMatrix& x, const ComplexMatrix& y) { return add(x, y); }
inline ComplexMatrix operator-(const ComplexMatrix& x, const ComplexMatrix& y) {
  return subtract(x, y);
}
inline ComplexMatrix operator*(Complex lambda, const ComplexMatrix& x) {
  return scalar_mul(lambda, x);
}
inline ComplexMatrix operator*(const ComplexMatrix& x, const ComplexMatrix& y) {
  return matmul(x, y);
}

struct NormOptions {
  double tol = 1e-12;
  int max_iter = 10000;  // squaring steps; about 64 always suffice in binary64
};

/// Largest singular value of x (the C*-norm on M_n).
///
/// Power iteration on the Gram matrix x*x, accelerated by repeated squaring
/// of the (rescaled) Gram matrix, stopped once the eigen-residual
/// ||Gv - rho v|| drops below tol * rho. The first start vector is all-ones;
/// a second fixed start vector with incommensurate phases is run as well and
/// the larger estimate wins, so a start vector that happens to be orthogonal
/// to the top singular subspace cannot produce a wrong answer.
double spectral_norm(const ComplexMatrix& x, NormOptions options = {});

/// Shorthand for spectral_norm with default options.
inline double norm(const ComplexMatrix& x) { return spectral_norm(x); }

/// Hilbert-Schmidt pairing trace(x y*).
Complex hs_inner(const ComplexMatrix& x, const ComplexMatrix& y);

/// max_{ij} |x_ij - y_ij|.
double max_abs_diff(const ComplexMatrix& x, const ComplexMatrix& y);

/// Modulus of the largest entry.
double max_abs_entry(const ComplexMatrix& x) noexcept;

/// Column-stacking vectorization, basis order E_11, E_21, ..., E_nn.
std::vector<Complex> vec(const ComplexMatrix& x);
ComplexMatrix unvec(std::size_t dim, std::span<const Complex> stacked);

}  // namespace tristab::linalg

#endif  // TRISTAB_LINALG_HPP
