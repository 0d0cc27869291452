#ifndef TRISTAB_TRIPLE_HPP
#define TRISTAB_TRIPLE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tristab/linalg.hpp"
#include "tristab/linear_operator.hpp"

namespace tristab::triple {

/// Outcome of an identity check: the (already normalized) residual, the
/// tolerance it was compared against, and the verdict.
struct Check {
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

inline Check make_check(double residual, double tolerance) {
  return {residual, tolerance, residual <= tolerance};
}

/// max(1, product of the spectral norms of the inputs).
double residual_scale(std::initializer_list<const ComplexMatrix*> inputs);

// -- products ---------------------------------------------------------------

/// Anticommutator x o y = (xy + yx)/2.
ComplexMatrix jordan_product(const ComplexMatrix& x, const ComplexMatrix& y);

/// {x, y, z} = (x y* z + z y* x)/2, the canonical triple product on M_n.
ComplexMatrix triple_product_cstar(const ComplexMatrix& x, const ComplexMatrix& y,
                                   const ComplexMatrix& z);

/// {x, y, z} = (x o y*) o z + (y* o z) o x - (x o z) o y*.
ComplexMatrix triple_product_jbstar(const ComplexMatrix& x, const ComplexMatrix& y,
                                    const ComplexMatrix& z);

inline ComplexMatrix triple_product(const ComplexMatrix& x, const ComplexMatrix& y,
                                    const ComplexMatrix& z) {
  return triple_product_cstar(x, y, z);
}

/// Tabulated x -> {a, b, x}.
LinearOperator operator_L(const ComplexMatrix& a, const ComplexMatrix& b);

// -- axiom checkers -----------------------------------------------------------

/// ||{x,y,z} - {z,y,x}||, absolute.
Check check_commutativity(const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& z,
                          double tol);

/// L(a,b){x,y,z} against {L(a,b)x,y,z} - {x,L(b,a)y,z} + {x,y,L(a,b)z};
/// residual divided by max(1, ||a|| ||b|| ||x|| ||y|| ||z||).
Check check_jordan_identity(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& x,
                            const ComplexMatrix& y, const ComplexMatrix& z, double tol);

/// | ||{x,x,x}|| - ||x||^3 | / max(1, ||x||^3).
Check check_norm_identity(const ComplexMatrix& x, double tol);

/// Hilbert-Schmidt proxy for "L(a,a) is hermitian with positive spectrum":
/// self-adjointness over all probe pairs and quadratic-form positivity over
/// all probes.
struct PositivityReport {
  double max_self_adjoint_violation = 0.0;
  double max_positivity_violation = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

PositivityReport check_L_positive(const ComplexMatrix& a, std::span<const ComplexMatrix> probes,
                                  double tol);

/// ||{x,y,z}_cstar - {x,y,z}_jbstar|| / max(1, ||x|| ||y|| ||z||).
Check check_product_agreement(const ComplexMatrix& x, const ComplexMatrix& y,
                              const ComplexMatrix& z, double tol);

// -- homomorphisms and derivations ---------------------------------------------

/// ||psi{x,y,z} - {psi x, psi y, psi z}|| / max(1, ||x|| ||y|| ||z||).
double homomorphism_residual(const LinearOperator& psi, const ComplexMatrix& x,
                             const ComplexMatrix& y, const ComplexMatrix& z);

/// ||d{x,y,z} - {dx,y,z} - {x,dy,z} - {x,y,dz}|| / max(1, ||x|| ||y|| ||z||).
double derivation_residual(const LinearOperator& d, const ComplexMatrix& x, const ComplexMatrix& y,
                           const ComplexMatrix& z);

/// psi(x) = u x u*. Throws std::invalid_argument if u is not unitary.
LinearOperator make_triple_homomorphism(const ComplexMatrix& u);

/// d(x) = a x - x a. Throws std::invalid_argument if a is not skew-adjoint.
LinearOperator make_triple_derivation(const ComplexMatrix& a);

struct CertificationOptions {
  std::size_t samples = 32;
  std::uint64_t seed = 0x7468657461ULL;
  double tolerance = 1e-10;
};

/// D = theta o d. Before composing, theta is checked as a triple
/// homomorphism and d as a triple derivation on seeded random triples;
/// residuals above the tolerance throw std::invalid_argument.
LinearOperator make_theta_derivation(const LinearOperator& theta, const LinearOperator& d,
                                     const CertificationOptions& options = {});

/// Absolute ||D{x,y,z} - {Dx,th y,th z} - {th x,Dy,th z} - {th x,th y,Dz}||.
double theta_derivation_residual(const LinearOperator& D, const LinearOperator& theta,
                                 const ComplexMatrix& x, const ComplexMatrix& y,
                                 const ComplexMatrix& z);

/// The one-variable (Jordan) version of theta_derivation_residual at (x,x,x).
double jordan_theta_residual(const LinearOperator& D, const LinearOperator& theta,
                             const ComplexMatrix& x);

}  // namespace tristab::triple

#endif  // TRISTAB_TRIPLE_HPP
