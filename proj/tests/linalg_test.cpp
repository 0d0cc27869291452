#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "tristab/linalg.hpp"
#include "tristab/random.hpp"

using namespace tristab;
using namespace tristab::linalg;

namespace {

// Independent oracle: the largest singular value of a 2x2 matrix in closed
// form, from the eigenvalues of the Gram matrix.
double singular_2x2(const ComplexMatrix& x) {
  const ComplexMatrix g = matmul(adjoint(x), x);
  const double a = g(0, 0).real();
  const double d = g(1, 1).real();
  const double b2 = std::norm(g(0, 1));
  return std::sqrt((a + d) / 2.0 + std::sqrt((a - d) * (a - d) / 4.0 + b2));
}

}  // namespace

TEST(SpectralNorm, DiagonalExample) {
  const auto x = ComplexMatrix::diagonal({3.0, Complex{0.0, -4.0}});
  EXPECT_NEAR(norm(x), 4.0, 1e-12);
}

TEST(SpectralNorm, RankOneAllOnes) {
  ComplexMatrix x(2);
  for (auto& c : x.row_major()) c = 1.0;
  EXPECT_NEAR(norm(x), 2.0, 1e-12);
}

TEST(SpectralNorm, ZeroShortCircuits) { EXPECT_EQ(norm(ComplexMatrix::zero(3)), 0.0); }

TEST(SpectralNorm, UnitaryHasNormOne) {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(norm(random_unitary(4, rng)), 1.0, 1e-12);
}

TEST(SpectralNorm, StartVectorInKernelOfAllOnes) {
  // all-ones lies in the kernel of this matrix; the second start must catch it
  const ComplexMatrix x{{1.0, -1.0}, {1.0, -1.0}};
  EXPECT_NEAR(norm(x), 2.0, 1e-12);
}

TEST(SpectralNorm, NearlyDegenerateTopSingularValues) {
  const auto x = ComplexMatrix::diagonal({1.0, 1.0 - 1e-7, 0.5});
  EXPECT_NEAR(norm(x), 1.0, 1e-12);
  const auto y = ComplexMatrix::diagonal({1.0, 0.999});
  EXPECT_NEAR(norm(y), 1.0, 1e-12);
}

TEST(SpectralNorm, TinyAndHugeEntries) {
  const auto tiny = ComplexMatrix::diagonal({1e-170, 2e-170});
  EXPECT_NEAR(norm(tiny) / 2e-170, 1.0, 1e-12);
  const auto huge = ComplexMatrix::diagonal({1e170, Complex{0.0, 3e170}});
  EXPECT_NEAR(norm(huge) / 3e170, 1.0, 1e-12);
}

TEST(SpectralNorm, MatchesClosedForm2x2) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const ComplexMatrix x = random_matrix(2, rng);
    const double oracle = singular_2x2(x);
    EXPECT_NEAR(norm(x), oracle, 1e-12 * oracle);
  }
}

TEST(SpectralNorm, RejectsNonFinite) {
  ComplexMatrix x(2);
  x(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(norm(x), std::invalid_argument);
}

TEST(SpectralNorm, PropertiesOnRandomMatrices) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 5);
    const ComplexMatrix x = random_matrix(n, rng);
    const ComplexMatrix y = random_matrix(n, rng);
    const Complex lambda{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double nx = norm(x);
    const double ny = norm(y);
    EXPECT_NEAR(norm(adjoint(x)), nx, 1e-10 * nx);
    EXPECT_NEAR(norm(scalar_mul(lambda, x)), std::abs(lambda) * nx, 1e-10 * std::abs(lambda) * nx);
    EXPECT_LE(norm(matmul(x, y)), nx * ny * (1 + 1e-10));
    EXPECT_LE(norm(add(x, y)), (nx + ny) * (1 + 1e-10));
    // C*-identity ||x* x|| = ||x||^2
    EXPECT_NEAR(norm(matmul(adjoint(x), x)), nx * nx, 1e-10 * nx * nx);
  }
}

TEST(SpectralNorm, PowerOfTwoScalingIsExact) {
  Rng rng(5);
  const ComplexMatrix x = random_matrix(3, rng);
  EXPECT_EQ(norm(scalar_mul(std::ldexp(1.0, 40), x)), std::ldexp(norm(x), 40));
}

TEST(Matrix, ArithmeticAndAdjoint) {
  const ComplexMatrix x{{1.0, Complex{0, 1}}, {2.0, 3.0}};
  const ComplexMatrix y{{0.0, 1.0}, {1.0, 0.0}};
  const ComplexMatrix xy = matmul(x, y);
  EXPECT_EQ(xy, (ComplexMatrix{{Complex{0, 1}, 1.0}, {3.0, 2.0}}));
  const ComplexMatrix xa = adjoint(x);
  EXPECT_EQ(xa(0, 1), Complex(2.0, 0.0));
  EXPECT_EQ(xa(1, 0), Complex(0.0, -1.0));
  EXPECT_EQ(add(x, y) - y, x);
  EXPECT_THROW(matmul(x, ComplexMatrix::identity(3)), DimensionMismatch);
}

TEST(Matrix, HilbertSchmidtPairing) {
  const ComplexMatrix x{{1.0, Complex{0, 2}}, {0.0, 1.0}};
  const ComplexMatrix y{{Complex{0, 1}, 1.0}, {1.0, 1.0}};
  // trace(x y*) by hand
  const Complex expected = matmul(x, adjoint(y))(0, 0) + matmul(x, adjoint(y))(1, 1);
  EXPECT_NEAR(std::abs(hs_inner(x, y) - expected), 0.0, 1e-15);
}

TEST(Matrix, VecIsColumnStacking) {
  const ComplexMatrix x{{1.0, 2.0}, {3.0, 4.0}};
  const auto v = vec(x);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0], Complex(1.0));
  EXPECT_EQ(v[1], Complex(3.0));
  EXPECT_EQ(v[2], Complex(2.0));
  EXPECT_EQ(v[3], Complex(4.0));
  EXPECT_EQ(unvec(2, v), x);
}

TEST(Random, SeedStreamsAreStable) {
  EXPECT_EQ(derive_seed(42, 1), derive_seed(42, 1));
  EXPECT_NE(derive_seed(42, 1), derive_seed(42, 2));
  EXPECT_NE(derive_seed(42, 1), derive_seed(43, 1));
}

TEST(Random, ProbesAreLogSpacedInRange) {
  const auto probes = make_probes(3, 50, 9);
  ASSERT_EQ(probes.size(), 50u);
  for (const auto& x : probes) {
    EXPECT_GE(norm(x), 1e-2 * (1 - 1e-10));
    EXPECT_LE(norm(x), 1e1 * (1 + 1e-10));
  }
  EXPECT_EQ(make_probes(3, 50, 9), probes);
}

TEST(Random, SkewAdjointAndUnimodular) {
  Rng rng(1);
  const ComplexMatrix a = random_skew_adjoint(3, rng, 2.0);
  EXPECT_LE(max_abs_diff(adjoint(a), scalar_mul(-1.0, a)), 1e-15);
  EXPECT_NEAR(norm(a), 2.0, 1e-12);
  for (const auto& mu : unimodular_samples(16, 4)) EXPECT_NEAR(std::abs(mu), 1.0, 1e-15);
}

TEST(Matrix, UnitExamples) {
  const auto e11 = ComplexMatrix::unit(2, 0, 0);
  const auto e12 = ComplexMatrix::unit(2, 0, 1);
  const auto e21 = ComplexMatrix::unit(2, 1, 0);
  const auto e22 = ComplexMatrix::unit(2, 1, 1);
  const auto id = ComplexMatrix::identity(2);
  EXPECT_EQ(e11 + e22, id);
  EXPECT_EQ((ComplexMatrix{{1, 2}, {3, 4}} + ComplexMatrix{{4, 3}, {2, 1}}),
            (ComplexMatrix{{5, 5}, {5, 5}}));
  EXPECT_EQ(add(e12, ComplexMatrix::zero(2)), e12);
  EXPECT_EQ(scalar_mul(1.0, e12), e12);
  EXPECT_EQ(scalar_mul(0.0, e12), ComplexMatrix::zero(2));
  EXPECT_EQ(scalar_mul(Complex{0, 1}, e12)(0, 1), Complex(0, 1));
  EXPECT_EQ(matmul(id, e21), e21);
  EXPECT_EQ(matmul(e12, e21), e11);
  EXPECT_EQ(matmul(e12, e12), ComplexMatrix::zero(2));
  EXPECT_EQ(adjoint(id), id);
  EXPECT_EQ(adjoint(e12), e21);
  EXPECT_EQ(adjoint(ComplexMatrix::diagonal({Complex{0, 1}, 0.0})),
            ComplexMatrix::diagonal({Complex{0, -1}, 0.0}));
  EXPECT_EQ(hs_inner(id, id), Complex(2.0));
  EXPECT_EQ(hs_inner(e11, e22), Complex(0.0));
  EXPECT_EQ(hs_inner(e12, e12), Complex(1.0));
  EXPECT_NEAR(norm(id), 1.0, 1e-12);
  EXPECT_NEAR(norm(e12), 1.0, 1e-12);
}

TEST(Matrix, AdjointIsConjugateLinearInvolution) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const ComplexMatrix x = random_matrix(3, rng);
    const ComplexMatrix y = random_matrix(3, rng);
    const Complex lambda{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const ComplexMatrix lhs = adjoint(add(scalar_mul(lambda, x), y));
    const ComplexMatrix rhs = add(scalar_mul(std::conj(lambda), adjoint(x)), adjoint(y));
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-15);
    EXPECT_EQ(adjoint(adjoint(x)), x);
  }
}
