#include "tristab/triple.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tristab/random.hpp"

namespace tristab::triple {

using linalg::adjoint;
using linalg::matmul;
using linalg::norm;

double residual_scale(std::initializer_list<const ComplexMatrix*> inputs) {
  double product = 1.0;
  for (const auto* m : inputs) product *= norm(*m);
  return std::max(1.0, product);
}

ComplexMatrix jordan_product(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix out = matmul(x, y);
  out += matmul(y, x);
  out *= 0.5;
  return out;
}

ComplexMatrix triple_product_cstar(const ComplexMatrix& x, const ComplexMatrix& y,
                                   const ComplexMatrix& z) {
  if (x.dim() != z.dim()) throw linalg::DimensionMismatch("triple_product", x.dim(), z.dim());
  const ComplexMatrix y_adj = adjoint(y);
  ComplexMatrix out = matmul(matmul(x, y_adj), z);
  out += matmul(matmul(z, y_adj), x);
  out *= 0.5;
  return out;
}

ComplexMatrix triple_product_jbstar(const ComplexMatrix& x, const ComplexMatrix& y,
                                    const ComplexMatrix& z) {
  const ComplexMatrix y_adj = adjoint(y);
  ComplexMatrix out = jordan_product(jordan_product(x, y_adj), z);
  out += jordan_product(jordan_product(y_adj, z), x);
  out -= jordan_product(jordan_product(x, z), y_adj);
  return out;
}

LinearOperator operator_L(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw linalg::DimensionMismatch("operator_L", a.dim(), b.dim());
  const std::size_t n = a.dim();
  ComplexMatrix coeffs(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    const auto column = linalg::vec(triple_product_cstar(a, b, ComplexMatrix::unit(n, k % n, k / n)));
    for (std::size_t i = 0; i < n * n; ++i) coeffs(i, k) = column[i];
  }
  return LinearOperator::tabulated(n, std::move(coeffs));
}

Check check_commutativity(const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& z,
                          double tol) {
  const double r = norm(linalg::subtract(triple_product(x, y, z), triple_product(z, y, x)));
  return make_check(r, tol);
}

Check check_jordan_identity(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& x,
                            const ComplexMatrix& y, const ComplexMatrix& z, double tol) {
  const ComplexMatrix lhs = triple_product(a, b, triple_product(x, y, z));
  ComplexMatrix rhs = triple_product(triple_product(a, b, x), y, z);
  rhs -= triple_product(x, triple_product(b, a, y), z);
  rhs += triple_product(x, y, triple_product(a, b, z));
  const double scale = residual_scale({&a, &b, &x, &y, &z});
  return make_check(norm(linalg::subtract(lhs, rhs)) / scale, tol);
}

Check check_norm_identity(const ComplexMatrix& x, double tol) {
  const double cube = std::pow(norm(x), 3);
  const double lhs = norm(triple_product(x, x, x));
  return make_check(std::abs(lhs - cube) / std::max(1.0, cube), tol);
}

PositivityReport check_L_positive(const ComplexMatrix& a, std::span<const ComplexMatrix> probes,
                                  double tol) {
  if (probes.empty()) throw std::invalid_argument("check_L_positive: probes must be nonempty");
  const LinearOperator L = operator_L(a, a);
  std::vector<ComplexMatrix> images;
  images.reserve(probes.size());
  for (const auto& x : probes) images.push_back(L(x));

  PositivityReport report;
  report.tolerance = tol;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double form = linalg::hs_inner(images[i], probes[i]).real();
    report.max_positivity_violation = std::max(report.max_positivity_violation, -form);
    for (std::size_t j = 0; j < probes.size(); ++j) {
      const double gap =
          std::abs(linalg::hs_inner(images[i], probes[j]) - linalg::hs_inner(probes[i], images[j]));
      report.max_self_adjoint_violation = std::max(report.max_self_adjoint_violation, gap);
    }
  }
  report.passed = report.max_self_adjoint_violation <= tol && report.max_positivity_violation <= tol;
  return report;
}

Check check_product_agreement(const ComplexMatrix& x, const ComplexMatrix& y,
                              const ComplexMatrix& z, double tol) {
  const double gap =
      norm(linalg::subtract(triple_product_cstar(x, y, z), triple_product_jbstar(x, y, z)));
  return make_check(gap / residual_scale({&x, &y, &z}), tol);
}

double homomorphism_residual(const LinearOperator& psi, const ComplexMatrix& x,
                             const ComplexMatrix& y, const ComplexMatrix& z) {
  const ComplexMatrix lhs = psi(triple_product(x, y, z));
  const ComplexMatrix rhs = triple_product(psi(x), psi(y), psi(z));
  return norm(linalg::subtract(lhs, rhs)) / residual_scale({&x, &y, &z});
}

double derivation_residual(const LinearOperator& d, const ComplexMatrix& x, const ComplexMatrix& y,
                           const ComplexMatrix& z) {
  ComplexMatrix gap = d(triple_product(x, y, z));
  gap -= triple_product(d(x), y, z);
  gap -= triple_product(x, d(y), z);
  gap -= triple_product(x, y, d(z));
  return norm(gap) / residual_scale({&x, &y, &z});
}

LinearOperator make_triple_homomorphism(const ComplexMatrix& u) {
  return LinearOperator::conjugation(u);
}

LinearOperator make_triple_derivation(const ComplexMatrix& a) {
  return LinearOperator::commutator(a);
}

LinearOperator make_theta_derivation(const LinearOperator& theta, const LinearOperator& d,
                                     const CertificationOptions& options) {
  if (theta.dim() != d.dim())
    throw linalg::DimensionMismatch("make_theta_derivation", theta.dim(), d.dim());
  const std::size_t n = theta.dim();
  Rng rng(options.seed);
  double worst_hom = 0.0;
  double worst_der = 0.0;
  for (std::size_t s = 0; s < options.samples; ++s) {
    const ComplexMatrix x = random_matrix(n, rng);
    const ComplexMatrix y = random_matrix(n, rng);
    const ComplexMatrix z = random_matrix(n, rng);
    worst_hom = std::max(worst_hom, homomorphism_residual(theta, x, y, z));
    worst_der = std::max(worst_der, derivation_residual(d, x, y, z));
  }
  if (!(worst_hom <= options.tolerance)) {
    throw std::invalid_argument("make_theta_derivation: theta is not a triple homomorphism "
                                "(relative residual " + std::to_string(worst_hom) + ")");
  }
  if (!(worst_der <= options.tolerance)) {
    throw std::invalid_argument("make_theta_derivation: d is not a triple derivation "
                                "(relative residual " + std::to_string(worst_der) + ")");
  }
  return LinearOperator::compose(theta, d);
}

double theta_derivation_residual(const LinearOperator& D, const LinearOperator& theta,
                                 const ComplexMatrix& x, const ComplexMatrix& y,
                                 const ComplexMatrix& z) {
  const ComplexMatrix tx = theta(x);
  const ComplexMatrix ty = theta(y);
  const ComplexMatrix tz = theta(z);
  ComplexMatrix gap = D(triple_product(x, y, z));
  gap -= triple_product(D(x), ty, tz);
  gap -= triple_product(tx, D(y), tz);
  gap -= triple_product(tx, ty, D(z));
  return norm(gap);
}

double jordan_theta_residual(const LinearOperator& D, const LinearOperator& theta,
                             const ComplexMatrix& x) {
  return theta_derivation_residual(D, theta, x, x, x);
}

}  // namespace tristab::triple
