#ifndef TRISTAB_LINEAR_OPERATOR_HPP
#define TRISTAB_LINEAR_OPERATOR_HPP

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tristab/linalg.hpp"

namespace tristab::triple {

using linalg::Complex;
using linalg::ComplexMatrix;

/// Tolerance for the unitary / skew-adjoint preconditions of the
/// structured forms.
inline constexpr double kStructureTolerance = 1e-10;

/// An immutable C-linear map on M_n(C).
///
/// Structured forms keep their defining data so that they serialize
/// compactly; `lower()` produces the equivalent tabulated form, the
/// n^2 x n^2 matrix acting on column-stacked matrices (basis order
/// E_11, E_21, ..., E_nn). Copies share the underlying node.
class LinearOperator {
 public:
  enum class Form { kConjugation, kCommutator, kScaled, kSum, kCompose, kTabulated };

  /// x -> u x u*. Throws std::invalid_argument unless ||u*u - I|| <= 1e-10.
  static LinearOperator conjugation(ComplexMatrix u);
  /// x -> a x - x a. Throws std::invalid_argument unless ||a* + a|| <= 1e-10.
  static LinearOperator commutator(ComplexMatrix a);
  static LinearOperator scaled(Complex c, LinearOperator inner);
  static LinearOperator sum(std::size_t dim, std::vector<LinearOperator> terms);
  /// x -> outer(inner(x)).
  static LinearOperator compose(LinearOperator outer, LinearOperator inner);
  /// `coeffs` has dimension n^2.
  static LinearOperator tabulated(std::size_t dim, ComplexMatrix coeffs);

  static LinearOperator identity(std::size_t dim);
  static LinearOperator zero(std::size_t dim);

  std::size_t dim() const noexcept;
  Form form() const noexcept;

  ComplexMatrix apply(const ComplexMatrix& x) const;
  ComplexMatrix operator()(const ComplexMatrix& x) const { return apply(x); }

  /// Equivalent tabulated operator. Tabulated operators return themselves.
  LinearOperator lower() const;

  /// Coefficient matrix of the tabulated form (lowers on demand).
  ComplexMatrix coefficients() const;

  /// Defining data of the structured forms; throw std::logic_error when
  /// the form does not match.
  const ComplexMatrix& matrix() const;  // conjugation u, commutator a, tabulated coeffs
  Complex scale() const;                // scaled
  const LinearOperator& inner() const;  // scaled, compose
  const LinearOperator& outer() const;  // compose
  const std::vector<LinearOperator>& terms() const;  // sum

  /// JSON text. Doubles are written with 17 significant digits so that
  /// `from_json(to_json(op))` reproduces every coefficient bit for bit.
  std::string to_json() const;
  static LinearOperator from_json(std::string_view text);

 private:
  struct Node;
  explicit LinearOperator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

std::string_view to_string(LinearOperator::Form form) noexcept;

/// Largest coefficient difference between the tabulated forms of a and b.
double max_coefficient_diff(const LinearOperator& a, const LinearOperator& b);

}  // namespace tristab::triple

#endif  // TRISTAB_LINEAR_OPERATOR_HPP
