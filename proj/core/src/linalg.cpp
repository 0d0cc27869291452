#include "tristab/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tristab::linalg {

namespace {

void require_same_dim(std::string_view op, const ComplexMatrix& x, const ComplexMatrix& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch(op, x.dim(), y.dim());
}

std::string mismatch_message(std::string_view op, std::size_t lhs, std::size_t rhs) {
  std::ostringstream out;
  out << op << ": dimension mismatch (" << lhs << " vs " << rhs << ")";
  return out.str();
}

double vector_norm(std::span<const Complex> v) {
  double sum = 0.0;
  for (const auto& c : v) sum += std::norm(c);
  return std::sqrt(sum);
}

struct Estimate {
  double eigenvalue = 0.0;
  bool converged = false;
};

// Rayleigh quotient of the Hermitian PSD `gram` at direction `v`, with the
// eigen-residual test ||Gv - rho v|| <= tol rho.
Estimate rayleigh(const ComplexMatrix& gram, std::vector<Complex> v, double tol) {
  const std::size_t n = gram.dim();
  const double len = vector_norm(v);
  if (len == 0.0) return {0.0, true};  // start vector annihilated: lies in the kernel
  for (auto& c : v) c /= len;
  std::vector<Complex> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) acc += gram(i, j) * v[j];
    w[i] = acc;
  }
  double rho = 0.0;
  for (std::size_t i = 0; i < n; ++i) rho += (std::conj(v[i]) * w[i]).real();
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) residual += std::norm(w[i] - rho * v[i]);
  return {rho, std::sqrt(residual) <= tol * rho};
}

std::vector<Complex> times_vector(const ComplexMatrix& m, std::span<const Complex> v) {
  const std::size_t n = m.dim();
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += m(i, j) * v[j];
  return out;
}

}  // namespace

DimensionMismatch::DimensionMismatch(std::string_view op, std::size_t lhs, std::size_t rhs)
    : std::invalid_argument(mismatch_message(op, lhs, rhs)) {}

NonConvergence::NonConvergence(double last_estimate, int iterations)
    : std::runtime_error("spectral_norm: power iteration did not converge after " +
                         std::to_string(iterations) + " iterations (last estimate " +
                         std::to_string(last_estimate) + ")"),
      last_estimate_(last_estimate),
      iterations_(iterations) {}

ComplexMatrix::ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}

ComplexMatrix::ComplexMatrix(std::size_t dim, std::vector<Complex> row_major)
    : dim_(dim), data_(std::move(row_major)) {
  if (data_.size() != dim_ * dim_) {
    throw std::invalid_argument("ComplexMatrix: expected " + std::to_string(dim_ * dim_) +
                                " entries, got " + std::to_string(data_.size()));
  }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
    : dim_(rows.size()) {
  data_.reserve(dim_ * dim_);
  for (const auto& row : rows) {
    if (row.size() != dim_) throw std::invalid_argument("ComplexMatrix: rows must form a square");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
  ComplexMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::unit(std::size_t dim, std::size_t row, std::size_t col) {
  if (row >= dim || col >= dim) throw std::out_of_range("ComplexMatrix::unit: index out of range");
  ComplexMatrix m(dim);
  m(row, col) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const Complex> values) {
  ComplexMatrix m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::initializer_list<Complex> values) {
  return diagonal(std::span<const Complex>(values.begin(), values.size()));
}

bool ComplexMatrix::is_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
  require_same_dim("add", *this, rhs);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
  require_same_dim("subtract", *this, rhs);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex scalar) noexcept {
  for (auto& c : data_) c *= scalar;
  return *this;
}

ComplexMatrix add(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix out = x;
  out += y;
  return out;
}

ComplexMatrix subtract(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix out = x;
  out -= y;
  return out;
}

ComplexMatrix scalar_mul(Complex lambda, const ComplexMatrix& x) {
  ComplexMatrix out = x;
  out *= lambda;
  return out;
}

ComplexMatrix matmul(const ComplexMatrix& x, const ComplexMatrix& y) {
  require_same_dim("matmul", x, y);
  const std::size_t n = x.dim();
  ComplexMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const Complex xik = x(i, k);
      if (xik == Complex{}) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += xik * y(k, j);
    }
  }
  return out;
}

ComplexMatrix adjoint(const ComplexMatrix& x) {
  const std::size_t n = x.dim();
  ComplexMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = std::conj(x(i, j));
  return out;
}

double spectral_norm(const ComplexMatrix& x, NormOptions options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");
  if (!x.is_finite()) throw std::invalid_argument("spectral_norm: matrix has non-finite entries");
  const double largest = max_abs_entry(x);
  if (largest == 0.0) return 0.0;

  // a power-of-two prescale keeps the Gram matrix in range and is exact
  const int exponent = std::ilogb(largest);
  const ComplexMatrix unit_scale = scalar_mul(std::ldexp(1.0, -exponent), x);
  const std::size_t n = x.dim();
  const ComplexMatrix gram = matmul(adjoint(unit_scale), unit_scale);

  std::vector<Complex> ones(n, Complex{1.0, 0.0});
  std::vector<Complex> twisted(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    twisted[k] = std::polar(1.0 + 0.5 * static_cast<double>(k) / static_cast<double>(n),
                            golden_angle * static_cast<double>(k + 1));
  }

  // Power iteration with repeated squaring: at step k the start vectors are
  // multiplied by G^(2^k), so a relative spectral gap d needs about
  // log2(1/d) steps instead of 1/d.
  ComplexMatrix power = gram;
  double best = 0.0;
  for (int step = 0; step < options.max_iter; ++step) {
    const Estimate first = rayleigh(gram, times_vector(power, ones), options.tol);
    const Estimate second = rayleigh(gram, times_vector(power, twisted), options.tol);
    best = std::max(first.eigenvalue, second.eigenvalue);
    if (first.converged && second.converged) return std::ldexp(std::sqrt(std::max(best, 0.0)), exponent);
    power = matmul(power, power);
    const double scale = max_abs_entry(power);
    if (scale == 0.0 || !std::isfinite(scale)) break;
    power *= 1.0 / scale;
  }
  throw NonConvergence(std::ldexp(std::sqrt(std::max(best, 0.0)), exponent), options.max_iter);
}

Complex hs_inner(const ComplexMatrix& x, const ComplexMatrix& y) {
  require_same_dim("hs_inner", x, y);
  // trace(x y*) = sum_ij x_ij conj(y_ij)
  Complex acc{};
  const auto xs = x.row_major();
  const auto ys = y.row_major();
  for (std::size_t k = 0; k < xs.size(); ++k) acc += xs[k] * std::conj(ys[k]);
  return acc;
}

double max_abs_diff(const ComplexMatrix& x, const ComplexMatrix& y) {
  require_same_dim("max_abs_diff", x, y);
  double worst = 0.0;
  const auto xs = x.row_major();
  const auto ys = y.row_major();
  for (std::size_t k = 0; k < xs.size(); ++k) worst = std::max(worst, std::abs(xs[k] - ys[k]));
  return worst;
}

double max_abs_entry(const ComplexMatrix& x) noexcept {
  double worst = 0.0;
  for (const auto& c : x.row_major()) worst = std::max(worst, std::abs(c));
  return worst;
}

std::vector<Complex> vec(const ComplexMatrix& x) {
  const std::size_t n = x.dim();
  std::vector<Complex> out(n * n);
  for (std::size_t col = 0; col < n; ++col)
    for (std::size_t row = 0; row < n; ++row) out[col * n + row] = x(row, col);
  return out;
}

ComplexMatrix unvec(std::size_t dim, std::span<const Complex> stacked) {
  if (stacked.size() != dim * dim) throw DimensionMismatch("unvec", dim * dim, stacked.size());
  ComplexMatrix out(dim);
  for (std::size_t col = 0; col < dim; ++col)
    for (std::size_t row = 0; row < dim; ++row) out(row, col) = stacked[col * dim + row];
  return out;
}

}  // namespace tristab::linalg
