#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tristab/random.hpp"
#include "tristab/stability.hpp"

using namespace tristab;
using namespace tristab::stability;
using linalg::Complex;
using linalg::ComplexMatrix;

namespace {

// Scalar oracle for the bound constant at ||x|| = 1: the scheme's weighted
// series summed naively on norms, independent of the matrix code paths.
double naive_bound(Scheme scheme, double eps, double p) {
  auto pw = [p](double t) { return t == 0.0 ? 0.0 : std::pow(t, p); };
  auto series = [&](double b, bool contract, int first, double n1, double n2) {
    double sum = 0.0;
    for (int j = first; j < 4000; ++j) {
      const double s = std::pow(b, contract ? -j : j);
      const double w = contract ? std::pow(b, j) : std::pow(b, -j);
      const double term = w * eps * (pw(s * n1) + pw(s * n2));
      sum += term;
      if (term < 1e-20 * sum) break;
    }
    return sum;
  };
  switch (scheme) {
    case Scheme::kCauchy2: return 0.5 * series(2.0, false, 0, 1.0, 1.0);
    case Scheme::kCauchy2Contractive: return 0.5 * series(2.0, true, 1, 1.0, 1.0);
    case Scheme::kJensen3: return (series(3.0, false, 0, 1.0, 1.0) + series(3.0, false, 0, 1.0, 3.0)) / 3.0;
    case Scheme::kJensen3Contractive:
      return series(3.0, true, 0, 1.0 / 3.0, 1.0 / 3.0) + series(3.0, true, 0, 1.0 / 3.0, 1.0);
  }
  return 0.0;
}

struct Pair {
  LinearOperator theta;
  LinearOperator D;
};

Pair exact_pair(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto theta = triple::make_triple_homomorphism(random_unitary(n, rng));
  auto D = triple::make_theta_derivation(theta, triple::make_triple_derivation(random_skew_adjoint(n, rng)));
  return {theta, D};
}

ComplexMatrix unit_norm(const ComplexMatrix& x) { return linalg::scalar_mul(1.0 / linalg::norm(x), x); }

}  // namespace

TEST(Schemes, ParseAndProperties) {
  EXPECT_EQ(parse_scheme("cauchy2"), Scheme::kCauchy2);
  EXPECT_EQ(parse_scheme("Jensen3Contractive"), Scheme::kJensen3Contractive);
  EXPECT_EQ(parse_scheme("cauchy2_contractive"), Scheme::kCauchy2Contractive);
  EXPECT_THROW(parse_scheme("cauchy3"), std::invalid_argument);
  for (auto s : {Scheme::kCauchy2, Scheme::kCauchy2Contractive, Scheme::kJensen3,
                 Scheme::kJensen3Contractive})
    EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_DOUBLE_EQ(convergence_rate(Scheme::kCauchy2, 0.5), std::pow(2.0, -0.5));
  EXPECT_DOUBLE_EQ(convergence_rate(Scheme::kJensen3Contractive, 4.0), 1.0 / 27.0);
}

TEST(Schemes, GateNamesTheCondition) {
  EXPECT_NO_THROW(check_gate(Scheme::kCauchy2, 0.5));
  EXPECT_NO_THROW(check_gate(Scheme::kJensen3Contractive, 3.5));
  try {
    check_gate(Scheme::kCauchy2, 1.0);
    FAIL();
  } catch (const GateViolation& e) {
    EXPECT_NE(std::string(e.what()).find("p < 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("p = 1"), std::string::npos);
  }
  try {
    check_gate(Scheme::kJensen3Contractive, 2.0);
    FAIL();
  } catch (const GateViolation& e) {
    EXPECT_NE(std::string(e.what()).find("p > 3"), std::string::npos);
  }
  EXPECT_THROW(check_gate(Scheme::kCauchy2Contractive, 0.5), GateViolation);
  EXPECT_THROW(check_gate(Scheme::kJensen3, 1.5), GateViolation);
}

TEST(Control, PowerTypeConvention) {
  EXPECT_EQ(power_of_norm(0.0, 0.0), 0.0);
  EXPECT_EQ(power_of_norm(2.0, 0.0), 1.0);
  const auto phi = ControlFunction::power_type(1.0, 0.0);
  const auto z = ComplexMatrix::zero(2);
  EXPECT_EQ(phi(z, z, z), 0.0);
  EXPECT_EQ(phi(ComplexMatrix::identity(2), z, z), 1.0);
  EXPECT_THROW(ControlFunction::power_type(-1.0, 1.0), std::invalid_argument);
}

TEST(PhiTilde, Examples) {
  const auto x = ComplexMatrix::identity(2);
  const auto z = ComplexMatrix::zero(2);
  const auto phi0 = ControlFunction::power_type(1.0, 0.0);
  EXPECT_NEAR(phi_tilde(phi0, Scheme::kCauchy2, x, x, z), 4.0, 1e-12);
  EXPECT_NEAR(phi_tilde_series(phi0, Scheme::kCauchy2, x, x, z), 4.0, 1e-12);
  EXPECT_EQ(phi_tilde(phi0, Scheme::kCauchy2, z, z, z), 0.0);
  EXPECT_EQ(phi_tilde_series(phi0, Scheme::kCauchy2, z, z, z), 0.0);
  const auto phi4 = ControlFunction::power_type(1.0, 4.0);
  const auto minus = linalg::scalar_mul(-1.0, x);
  const double expected = 2.0 / (1.0 - 1.0 / 27.0);
  EXPECT_NEAR(phi_tilde(phi4, Scheme::kJensen3Contractive, x, minus, z), expected, 1e-12);
  EXPECT_NEAR(phi_tilde_series(phi4, Scheme::kJensen3Contractive, x, minus, z), expected, 1e-12);
}

TEST(ErrorBound, Examples) {
  const auto x = ComplexMatrix::identity(2);
  EXPECT_NEAR(hyers_bound(ControlFunction::power_type(1.0, 0.0), Scheme::kCauchy2, x), 2.0, 1e-12);
  EXPECT_NEAR(hyers_bound(ControlFunction::power_type(0.1, 0.5), Scheme::kCauchy2, x),
              0.2 / (2.0 - std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(hyers_bound(ControlFunction::power_type(1.0, 4.0), Scheme::kJensen3Contractive, x),
              84.0 / 78.0, 1e-12);
}

TEST(ErrorBound, ClosedFormMatchesSeriesAndOracle) {
  const std::vector<std::pair<Scheme, std::vector<double>>> grid = {
      {Scheme::kCauchy2, {0.0, 0.3, 0.5, 0.9}},
      {Scheme::kCauchy2Contractive, {1.2, 2.0, 3.0}},
      {Scheme::kJensen3, {0.0, 0.5, 0.8}},
      {Scheme::kJensen3Contractive, {3.3, 4.0, 6.0}},
  };
  Rng rng(3);
  for (const auto& [scheme, ps] : grid) {
    for (double p : ps) {
      for (double eps : {0.1, 1.0}) {
        const auto phi = ControlFunction::power_type(eps, p);
        const double c = corollary_constant(scheme, eps, p);
        EXPECT_NEAR(naive_bound(scheme, eps, p), c, 1e-12 * c) << to_string(scheme) << " p=" << p;
        const ComplexMatrix x = random_matrix(3, rng);
        const double expected = c * std::pow(linalg::norm(x), p);
        EXPECT_NEAR(hyers_bound(phi, scheme, x), expected, 1e-12 * expected);
        EXPECT_NEAR(hyers_bound_series(phi, scheme, x), expected, 1e-12 * expected);
      }
    }
  }
}

TEST(ErrorBound, ConstantValues) {
  EXPECT_NEAR(corollary_constant(Scheme::kCauchy2, 1.0, 0.0), 2.0, 1e-15);
  EXPECT_NEAR(corollary_constant(Scheme::kCauchy2, 0.1, 0.5), 0.34142135623730950, 1e-15);
  EXPECT_NEAR(corollary_constant(Scheme::kCauchy2Contractive, 1.0, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(corollary_constant(Scheme::kJensen3, 1.0, 0.5), 3.7320508075688772, 1e-14);
  EXPECT_NEAR(corollary_constant(Scheme::kJensen3Contractive, 1.0, 4.0), 1.0769230769230769, 1e-15);
}

TEST(ErrorBound, CustomControlMatchesPowerType) {
  const auto power = ControlFunction::power_type(0.3, 0.5);
  const auto custom = ControlFunction::custom(
      [](const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c) {
        return 0.3 * (power_of_norm(linalg::norm(a), 0.5) + power_of_norm(linalg::norm(b), 0.5) +
                      power_of_norm(linalg::norm(c), 0.5));
      });
  Rng rng(4);
  const ComplexMatrix x = random_matrix(2, rng);
  const double expected = hyers_bound(power, Scheme::kJensen3, x);
  EXPECT_NEAR(hyers_bound(custom, Scheme::kJensen3, x), expected, 1e-12 * expected);
}

TEST(ErrorBound, DivergentCustomSeriesIsRejected) {
  const auto linear = ControlFunction::custom(
      [](const ComplexMatrix& a, const ComplexMatrix&, const ComplexMatrix&) {
        return linalg::norm(a);
      });
  const auto x = ComplexMatrix::identity(2);
  EXPECT_THROW(phi_tilde(linear, Scheme::kCauchy2, x, x, x), GateViolation);
  EXPECT_THROW(phi_tilde(linear, Scheme::kCauchy2Contractive, x, x, x), GateViolation);
}

TEST(Perturbation, BasicProperties) {
  const auto [theta, D] = exact_pair(2, 1);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 77);
  EXPECT_EQ(f(ComplexMatrix::zero(2)), ComplexMatrix::zero(2));
  const auto exact = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 77);
  const double c = perturbation_amplitude(0.1, 0.5, HypothesisForm::kCauchy);
  EXPECT_DOUBLE_EQ(c, 0.05);
  for (const auto& x : make_probes(2, 50, 5)) {
    EXPECT_EQ(exact(x), D(x));
    EXPECT_LE(linalg::norm(f.noise(x)), c * std::pow(linalg::norm(x), 0.5) * (1 + 1e-12));
    EXPECT_EQ(f(x), make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 77)(x));
  }
  EXPECT_THROW(make_perturbation(D, 0.1, 1.0, HypothesisForm::kCauchy, 1), GateViolation);
}

TEST(Perturbation, NoiseIsHomogeneousAlongRays) {
  const auto [theta, D] = exact_pair(2, 2);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 3);
  Rng rng(6);
  const ComplexMatrix x = random_matrix(2, rng);
  for (int l = 1; l < 20; ++l) {
    const double s = std::ldexp(1.0, l);
    const auto scaled = linalg::scalar_mul(1.0 / std::pow(s, 0.5), f.noise(linalg::scalar_mul(s, x)));
    EXPECT_LE(linalg::max_abs_diff(scaled, f.noise(x)), 1e-14);
  }
}

TEST(Perturbation, HypothesesHoldWithRatioAtMostOne) {
  const auto [theta, D] = exact_pair(2, 3);
  const auto mus = unimodular_samples(50, 9);
  const auto probes = make_probes(2, 100, 8);
  for (auto form : {HypothesisForm::kCauchy, HypothesisForm::kJensen}) {
    for (double p : {0.0, 0.5, 2.0, 4.0}) {
      if (form == HypothesisForm::kCauchy && p == 1.0) continue;
      const auto f = make_perturbation(D, 0.1, p, form, 10);
      const auto h = make_perturbation(theta, 0.1, p, form, 11);
      const auto report =
          verify_hypotheses(f, h, ControlFunction::power_type(0.1, p), form, probes, mus);
      EXPECT_EQ(report.f_equation.samples, 100u * 2 * 50);
      EXPECT_LE(report.f_equation.max_ratio, 1.0 + 1e-12);
      EXPECT_LE(report.h_equation.max_ratio, 1.0 + 1e-12);
      EXPECT_TRUE(std::isfinite(report.triple.max_ratio));
    }
  }
}

TEST(Perturbation, ExactPairSatisfiesHypothesesExactly) {
  const auto [theta, D] = exact_pair(3, 4);
  const auto f = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 1);
  const auto h = make_perturbation(theta, 0.0, 0.5, HypothesisForm::kCauchy, 2);
  const auto report = verify_hypotheses(f, h, ControlFunction::power_type(0.0, 0.5),
                                        HypothesisForm::kCauchy, make_probes(3, 30, 1),
                                        unimodular_samples(8, 2));
  EXPECT_LE(report.f_equation.max_absolute, 1e-10);
  EXPECT_LE(report.h_equation.max_absolute, 1e-10);
  EXPECT_LE(report.triple.max_absolute, 1e-10);
}

TEST(DirectMethod, ExactMapConvergesAtLevelOne) {
  const auto [theta, D] = exact_pair(2, 5);
  const auto f = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 1);
  Rng rng(1);
  const ComplexMatrix x = random_matrix(2, rng);
  const auto result = direct_method(f, Scheme::kCauchy2, x);
  EXPECT_TRUE(result.converged);
  EXPECT_EQ(result.levels, 1);
  EXPECT_LE(linalg::max_abs_diff(result.value, D(x)), 1e-15);
}

TEST(DirectMethod, GeometricTailBound) {
  const auto [theta, D] = exact_pair(2, 6);
  const double p = 0.5;
  const auto f = make_perturbation(D, 0.1, p, HypothesisForm::kCauchy, 2);
  const double c = f.spec().amplitude;
  const double r = std::pow(2.0, p - 1.0);
  Rng rng(2);
  const ComplexMatrix x = random_matrix(2, rng);
  const double nx = linalg::norm(x);
  for (int l = 0; l <= 60; l += 5) {
    const double err = linalg::norm(linalg::subtract(approximant(f, Scheme::kCauchy2, x, l), D(x)));
    EXPECT_LE(err, c * std::sqrt(nx) * std::pow(r, l) * (1 + 1e-9) + 1e-14);
  }
  EXPECT_LE(linalg::norm(linalg::subtract(approximant(f, Scheme::kCauchy2, x, 50), D(x))), 1e-6);
}

TEST(DirectMethod, SuccessiveRatiosMatchRate) {
  const auto [theta, D] = exact_pair(2, 7);
  struct Case {
    Scheme scheme;
    double eps, p;
  };
  for (const Case& k : {Case{Scheme::kCauchy2, 0.1, 0.5}, Case{Scheme::kJensen3, 0.1, 0.5},
                        Case{Scheme::kCauchy2Contractive, 0.1, 2.0},
                        Case{Scheme::kJensen3Contractive, 1.0, 4.0}}) {
    const auto f = make_perturbation(D, k.eps, k.p, hypothesis_form(k.scheme), 3);
    Rng rng(4);
    const auto x = unit_norm(random_matrix(2, rng));
    const auto result = direct_method(f, k.scheme, x);
    ASSERT_TRUE(result.converged);
    const auto ratios = successive_ratios(result.differences, 10);
    ASSERT_FALSE(ratios.empty());
    for (double r : ratios) EXPECT_NEAR(r, convergence_rate(k.scheme, k.p), 0.05);
  }
}

TEST(DirectMethod, SuccessiveRatiosWindow) {
  const std::vector<double> d = {1.0, 0.5, 0.25, 0.125};
  EXPECT_EQ(successive_ratios(d, 10), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(successive_ratios(d, 2).size(), 2u);
  EXPECT_TRUE(successive_ratios(std::vector<double>{1.0}, 5).empty());
}

TEST(DirectMethod, OverflowGuard) {
  const auto [theta, D] = exact_pair(2, 8);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  EXPECT_THROW(approximant(f, Scheme::kCauchy2, ComplexMatrix::identity(2), 600), std::overflow_error);
}

TEST(Recovery, ExactMapIsReturnedUnchanged) {
  const auto [theta, D] = exact_pair(2, 9);
  const auto f = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 1);
  const auto rec = recover_linear_map(f, Scheme::kCauchy2);
  EXPECT_LE(triple::max_coefficient_diff(rec.op, D), 1e-12);
}

TEST(Recovery, PerturbedMapIsRecoveredAndUnique) {
  const auto [theta, D] = exact_pair(2, 10);
  const auto f1 = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  const auto f2 = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 2);
  const auto r1 = recover_linear_map(f1, Scheme::kCauchy2);
  const auto r2 = recover_linear_map(f2, Scheme::kCauchy2);
  EXPECT_LE(triple::max_coefficient_diff(r1.op, D), 1e-6);
  EXPECT_LE(triple::max_coefficient_diff(r1.op, r2.op), 1e-6);
  // the Jensen limit of the same map is the same linear map
  const auto fj = make_perturbation(D, 0.1, 0.5, HypothesisForm::kJensen, 1);
  const auto rc = recover_linear_map(fj, Scheme::kCauchy2);
  const auto rj = recover_linear_map(fj, Scheme::kJensen3);
  EXPECT_LE(triple::max_coefficient_diff(rc.op, rj.op), 1e-6);
}

TEST(Recovery, ParallelMatchesSerialBitForBit) {
  const auto [theta, D] = exact_pair(3, 11);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  RecoveryOptions serial;
  RecoveryOptions parallel;
  parallel.threads = 8;
  EXPECT_EQ(recover_linear_map(f, Scheme::kCauchy2, serial).op.coefficients(),
            recover_linear_map(f, Scheme::kCauchy2, parallel).op.coefficients());
}

TEST(Recovery, NonConvergenceIsReported) {
  const auto [theta, D] = exact_pair(2, 12);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  RecoveryOptions options;
  options.l_max = 3;
  EXPECT_THROW(recover_linear_map(f, Scheme::kCauchy2, options), RecoveryFailure);
}

TEST(Verification, StabilityBoundPerScheme) {
  const auto [theta, D] = exact_pair(2, 13);
  struct Case {
    Scheme scheme;
    double eps, p;
  };
  const auto probes = make_probes(2, 100, 3);
  for (const Case& k : {Case{Scheme::kCauchy2, 0.1, 0.5}, Case{Scheme::kJensen3, 0.1, 0.5},
                        Case{Scheme::kCauchy2Contractive, 0.1, 2.0},
                        Case{Scheme::kJensen3Contractive, 1.0, 4.0}}) {
    const auto f = make_perturbation(D, k.eps, k.p, hypothesis_form(k.scheme), 4);
    const auto rec = recover_linear_map(f, k.scheme);
    const auto phi = ControlFunction::power_type(k.eps, k.p);
    const auto report = verify_stability_bound(f, rec.op, phi, k.scheme, probes);
    EXPECT_LE(report.max_ratio, 1.0 + 1e-9) << to_string(k.scheme);
    for (const auto& row : report.rows) {
      const double expected = corollary_constant(k.scheme, k.eps, k.p) * std::pow(row.norm_x, k.p);
      EXPECT_NEAR(row.bound, expected, 1e-12 * expected);
    }
  }
}

TEST(Verification, ZeroPerturbationGivesZeroRatios) {
  const auto [theta, D] = exact_pair(2, 14);
  const auto f = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 1);
  const auto rec = recover_linear_map(f, Scheme::kCauchy2);
  const auto report = verify_stability_bound(f, rec.op, ControlFunction::power_type(0.0, 0.5),
                                             Scheme::kCauchy2, make_probes(2, 20, 1));
  EXPECT_EQ(report.max_ratio, 0.0);
}

TEST(Verification, S1Homogeneity) {
  const auto [theta, D] = exact_pair(2, 15);
  const auto probes = make_probes(2, 10, 2);
  EXPECT_EQ(verify_s1_homogeneity(D, probes, std::vector<Complex>{1.0}, 0.0).residual, 0.0);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  const auto rec = recover_linear_map(f, Scheme::kCauchy2);
  const std::vector<Complex> mu{std::polar(1.0, std::numbers::pi / 4)};
  EXPECT_TRUE(verify_s1_homogeneity(rec.op, probes, mu, 1e-6).passed);
  EXPECT_THROW(verify_s1_homogeneity(D, probes, std::vector<Complex>{2.0}, 1e-6), std::invalid_argument);
}

TEST(Verification, UnimodularDecomposition) {
  const auto [a0, b0] = unimodular_average_decomposition(0.0);
  EXPECT_NEAR(std::abs(a0.value() - Complex(0, 1)), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(b0.value() - Complex(0, -1)), 0.0, 1e-16);
  const auto [a5, b5] = unimodular_average_decomposition(0.5);
  EXPECT_NEAR(a5.value().imag(), 0.86602540378443865, 1e-16);
  EXPECT_NEAR(std::abs(a5.value() - std::polar(1.0, std::numbers::pi / 3)), 0.0, 1e-15);
  const auto [a9, b9] = unimodular_average_decomposition(0.9);
  EXPECT_NEAR(a9.value().imag(), 0.43588989435406736, 2e-16);
  for (double g : {0.0, 0.25, 0.5, 0.9}) {
    const auto [m1, m2] = unimodular_average_decomposition(g);
    EXPECT_NEAR(std::abs((m1.value() + m2.value()) / 2.0 - g), 0.0, 2e-16);
  }
  EXPECT_THROW(unimodular_average_decomposition(1.0), std::out_of_range);
  EXPECT_THROW(unimodular_average_decomposition(-0.1), std::out_of_range);
  EXPECT_THROW(UnimodularScalar(Complex{1.0, 1e-3}), std::invalid_argument);
}

TEST(Verification, ComplexHomogeneity) {
  const auto [theta, D] = exact_pair(2, 16);
  Rng rng(5);
  const ComplexMatrix x = random_matrix(2, rng);
  EXPECT_LE(complex_homogeneity_via_decomposition(D, 1.0, x, 0.0).residual, 1e-16);
  EXPECT_LE(complex_homogeneity_via_decomposition(D, 2.0, x, 0.0).residual, 1e-15);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kCauchy, 1);
  const auto rec = recover_linear_map(f, Scheme::kCauchy2);
  for (Complex lambda : {Complex{0, 1}, Complex{0.9, 2.3}, Complex{-1.7, -0.4}})
    EXPECT_TRUE(complex_homogeneity_via_decomposition(rec.op, lambda, x, 1e-6).passed);
}

TEST(Verification, DerivationLimitExactIsZero) {
  const auto [theta, D] = exact_pair(2, 17);
  const auto f = make_perturbation(D, 0.0, 0.5, HypothesisForm::kCauchy, 1);
  const auto h = make_perturbation(theta, 0.0, 0.5, HypothesisForm::kCauchy, 2);
  Rng rng(6);
  const auto x = random_matrix(2, rng), y = random_matrix(2, rng), z = random_matrix(2, rng);
  for (int l = 0; l < 10; ++l)
    EXPECT_LE(derivation_limit_residual(f, h, Scheme::kCauchy2, x, y, z, l), 1e-14);
}

TEST(Verification, DerivationLimitDecaysAtSchemeRate) {
  const auto [theta, D] = exact_pair(2, 18);
  struct Case {
    Scheme scheme;
    double eps, p;
    int levels;
  };
  Rng rng(7);
  const auto x = unit_norm(random_matrix(2, rng));
  const auto y = unit_norm(random_matrix(2, rng));
  const auto z = unit_norm(random_matrix(2, rng));
  for (const Case& k : {Case{Scheme::kCauchy2, 0.1, 0.5, 40}, Case{Scheme::kJensen3, 0.1, 0.5, 40},
                        Case{Scheme::kJensen3Contractive, 1.0, 4.0, 8}}) {
    const auto form = hypothesis_form(k.scheme);
    const auto f = make_perturbation(D, k.eps, k.p, form, 3);
    const auto h = make_perturbation(theta, k.eps, k.p, form, 4);
    std::vector<double> seq;
    for (int l = 0; l <= k.levels; ++l) seq.push_back(derivation_limit_residual(f, h, k.scheme, x, y, z, l));
    for (std::size_t l = 5; l + 1 < seq.size(); ++l) EXPECT_LT(seq[l + 1], seq[l]);
    EXPECT_NEAR(seq.back() / seq[seq.size() - 2], convergence_rate(k.scheme, k.p), 0.05);
  }
}

TEST(Verification, ThetaDerivationCertificate) {
  const auto [theta, D] = exact_pair(3, 19);
  const auto probes = make_probes(3, 100, 4);
  EXPECT_LE(certify_theta_derivation(D, theta, probes, 1e-10).residual, 1e-10);
  const auto f = make_perturbation(D, 0.1, 0.5, HypothesisForm::kJensen, 1);
  const auto h = make_perturbation(theta, 0.1, 0.5, HypothesisForm::kJensen, 2);
  const auto d_hat = recover_linear_map(f, Scheme::kJensen3);
  const auto t_hat = recover_linear_map(h, Scheme::kJensen3);
  EXPECT_TRUE(certify_theta_derivation(d_hat.op, t_hat.op, probes, 1e-6, 4).passed);
}
