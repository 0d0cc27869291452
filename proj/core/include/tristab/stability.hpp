#ifndef TRISTAB_STABILITY_HPP
#define TRISTAB_STABILITY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tristab/linalg.hpp"
#include "tristab/linear_operator.hpp"
#include "tristab/triple.hpp"

namespace tristab::stability {

using linalg::Complex;
using linalg::ComplexMatrix;
using triple::Check;
using triple::LinearOperator;

// -- schemes --------------------------------------------------------------------

/// Direct-method iteration. The expanding schemes evaluate f(b^l x)/b^l,
/// the contractive ones b^l f(x/b^l), with base b = 2 (Cauchy) or 3 (Jensen).
enum class Scheme { kCauchy2, kCauchy2Contractive, kJensen3, kJensen3Contractive };

/// Which functional equation the perturbation is certified against.
enum class HypothesisForm { kCauchy, kJensen };

std::string_view to_string(Scheme scheme) noexcept;
std::string_view to_string(HypothesisForm form) noexcept;
/// Accepts "cauchy2", "cauchy2-contractive", "jensen3", "jensen3-contractive"
/// (case, '-' and '_' insensitive, so "Jensen3Contractive" also parses).
Scheme parse_scheme(std::string_view text);

HypothesisForm hypothesis_form(Scheme scheme) noexcept;
double scheme_base(Scheme scheme) noexcept;
bool is_contractive(Scheme scheme) noexcept;

/// Asymptotic ratio of successive direct-method differences for a
/// power-type perturbation of exponent p: 2^(p-1), 2^(1-p), 3^(p-1), 3^(1-p).
double convergence_rate(Scheme scheme, double p);

/// Raised when (scheme, p) violates the summability condition that makes
/// the scheme's series converge.
class GateViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Summability gate for power-type control: p < 1 (Cauchy2, Jensen3),
/// p > 1 (Cauchy2Contractive), p > 3 (Jensen3Contractive). Throws
/// GateViolation naming the condition.
void check_gate(Scheme scheme, double p);

// -- control functions ----------------------------------------------------------

/// ||x||^p with the convention ||0||^p = 0 for every p >= 0.
double power_of_norm(double norm, double p);

/// Nonnegative phi(x, y, z).
class ControlFunction {
 public:
  using Callable =
      std::function<double(const ComplexMatrix&, const ComplexMatrix&, const ComplexMatrix&)>;

  /// eps (||x||^p + ||y||^p + ||z||^p)
  static ControlFunction power_type(double eps, double p);
  static ControlFunction custom(Callable fn);

  bool is_power_type() const noexcept { return !custom_; }
  double eps() const noexcept { return eps_; }
  double p() const noexcept { return p_; }

  double operator()(const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& z) const;
  /// Evaluation from precomputed norms; power type only.
  double from_norms(double nx, double ny, double nz) const;

 private:
  ControlFunction() = default;
  double eps_ = 0.0;
  double p_ = 0.0;
  Callable custom_;
};

struct SeriesOptions {
  double tol = 1e-16;
  int max_terms = 10000;
};

/// The scheme's weighted series of phi:
///   Cauchy2             sum_{j>=0} 2^-j phi(2^j .)
///   Cauchy2Contractive  sum_{j>=1} 2^j  phi(2^-j .)
///   Jensen3             sum_{j>=0} 3^-j phi(3^j .)
///   Jensen3Contractive  sum_{j>=0} 3^j  phi(3^-j .)
/// Power-type phi uses the geometric closed form; custom phi is summed
/// until a term drops below tol * (sum + tol). Divergence throws
/// GateViolation.
double phi_tilde(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                 const ComplexMatrix& y, const ComplexMatrix& z, SeriesOptions options = {});

/// Same series, always summed term by term (no closed form).
double phi_tilde_series(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                        const ComplexMatrix& y, const ComplexMatrix& z, SeriesOptions options = {});

/// Bound on ||f(x) - D(x)|| for the scheme:
///   Cauchy schemes   phi~(x, x, 0) / 2
///   Jensen3          (phi~(x, -x, 0) + phi~(-x, 3x, 0)) / 3
///   Jensen3Contr.    phi~(x/3, -x/3, 0) + phi~(-x/3, x, 0)
double hyers_bound(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                   SeriesOptions options = {});
double hyers_bound_series(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                          SeriesOptions options = {});

/// Closed-form power-type bound constants: 2 eps/|2 - 2^p| (Cauchy schemes),
/// (3 + 3^p)/(3 - 3^p) eps (Jensen3), (3^p + 3)/(3^p - 3) eps (Jensen3Contractive).
double corollary_constant(Scheme scheme, double eps, double p);

// -- perturbed maps -------------------------------------------------------------

struct NoiseSpec {
  double amplitude = 0.0;
  double exponent = 0.0;
  std::uint64_t seed = 0;
};

/// f(x) = base(x) + c ||x||^p s(x) W, with W a seeded matrix of unit
/// spectral norm and s(x) = sin(alpha + beta Re tr(x) / ||x||), alpha and
/// beta seeded in [1, 2]. s depends only on the ray through x, so
/// ||f(x) - base(x)|| <= c ||x||^p and f(0) = 0.
class PerturbedMap {
 public:
  PerturbedMap(LinearOperator base, NoiseSpec noise);

  ComplexMatrix operator()(const ComplexMatrix& x) const;
  /// f(x) - base(x).
  ComplexMatrix noise(const ComplexMatrix& x) const;

  const LinearOperator& base() const noexcept { return base_; }
  const NoiseSpec& spec() const noexcept { return spec_; }
  const ComplexMatrix& direction() const noexcept { return direction_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  std::size_t dim() const noexcept { return base_.dim(); }

 private:
  LinearOperator base_;
  NoiseSpec spec_;
  ComplexMatrix direction_;
  double alpha_ = 1.0;
  double beta_ = 1.0;
};

/// Amplitude making the Cauchy (resp. Jensen) hypothesis hold with
/// phi = eps(||x||^p + ||y||^p) by the triangle inequality:
/// eps/(K + 1) (resp. eps/(2^(1-p) K + 1)), K = max(1, 2^(p-1)).
double perturbation_amplitude(double eps, double p, HypothesisForm form);

PerturbedMap make_perturbation(const LinearOperator& base, double eps, double p,
                               HypothesisForm form, std::uint64_t seed);

struct HypothesisRatio {
  double max_ratio = 0.0;      // max LHS/phi over samples with phi > 0
  double max_absolute = 0.0;   // max LHS over samples with phi == 0
  std::size_t samples = 0;
};

struct HypothesisReport {
  HypothesisRatio f_equation;  // Cauchy: f(mu x + y) - mu f(x) - f(y); Jensen: 2f((mu x + y)/2) - ...
  HypothesisRatio h_equation;
  HypothesisRatio triple;      // f{xyz} - {f h h} - {h f h} - {h h f} against phi(x, y, z)
};

/// Samples every probe x_i against y in {x_{i+1}, 0} and every mu; triples
/// are (x_i, x_{i+1}, x_{i+2}).
HypothesisReport verify_hypotheses(const PerturbedMap& f, const PerturbedMap& h,
                                   const ControlFunction& phi, HypothesisForm form,
                                   std::span<const ComplexMatrix> probes,
                                   std::span<const Complex> mu_samples);

// -- direct method --------------------------------------------------------------

struct DirectMethodOptions {
  double tol = 1e-9;
  int l_max = 200;
};

struct DirectMethodResult {
  ComplexMatrix value;
  int levels = 0;        // index l of the returned approximant A_l
  bool converged = false;
  std::vector<double> differences;  // ||A_{l+1} - A_l||, l = 0, 1, ...
};

/// Iterates A_l(x) until ||A_{l+1} - A_l|| <= tol max(1, ||A_l||) or
/// l reaches l_max. Throws std::overflow_error if a scaled argument grows
/// past 1e150 in norm.
DirectMethodResult direct_method(const PerturbedMap& f, Scheme scheme, const ComplexMatrix& x,
                                 DirectMethodOptions options = {});

/// The approximant A_l(x) for a single level.
ComplexMatrix approximant(const PerturbedMap& f, Scheme scheme, const ComplexMatrix& x, int level);

/// Ratios d_{k+1}/d_k over the last `window` ratios available.
std::vector<double> successive_ratios(std::span<const double> differences, std::size_t window);

class RecoveryFailure : public std::runtime_error {
 public:
  RecoveryFailure(const std::string& what, std::optional<ComplexMatrix> worst_probe,
                  double worst_residual);
  const std::optional<ComplexMatrix>& worst_probe() const noexcept { return worst_probe_; }
  double worst_residual() const noexcept { return worst_residual_; }

 private:
  std::optional<ComplexMatrix> worst_probe_;
  double worst_residual_;
};

struct RecoveryOptions {
  double tol = 1e-9;
  int l_max = 200;
  std::size_t certification_probes = 20;
  std::uint64_t seed = 0x5eed;
  unsigned threads = 1;
};

struct RecoveredMap {
  LinearOperator op;
  double worst_certification = 0.0;  // max ||op(x) - direct_method(f, x)|| / (tol max(1, ||x||))
  int max_levels = 0;
};

/// Tabulates lim A_l on the basis E_jk (each resolved to tol/16), then
/// certifies linearity: ||op(x) - direct_method(f, x)|| <= 10 tol max(1, ||x||)
/// on seeded random probes. Throws RecoveryFailure on non-convergence or a
/// failed certificate.
RecoveredMap recover_linear_map(const PerturbedMap& f, Scheme scheme,
                                const RecoveryOptions& options = {});

// -- verification ----------------------------------------------------------------

struct ProbeRow {
  double norm_x = 0.0;
  double bound = 0.0;
  double error = 0.0;
  double ratio = 0.0;
  friend bool operator==(const ProbeRow&, const ProbeRow&) = default;
};

struct BoundReport {
  double max_ratio = 0.0;
  std::vector<ProbeRow> rows;
};

/// Where the bound vanishes, an error up to this multiple of max(1, ||x||)
/// is rounding and counts as ratio 0.
inline constexpr double kZeroBoundRounding = 1e-12;

/// max over probes of ||f(x) - D(x)|| / hyers_bound(phi, scheme, x).
BoundReport verify_stability_bound(const PerturbedMap& f, const LinearOperator& recovered,
                                   const ControlFunction& phi, Scheme scheme,
                                   std::span<const ComplexMatrix> probes, unsigned threads = 1);

/// max ||D(mu x) - mu D(x)|| / max(1, ||x||).
Check verify_s1_homogeneity(const LinearOperator& D, std::span<const ComplexMatrix> probes,
                            std::span<const Complex> mu_samples, double tol);

/// A complex number of modulus one (within 1e-12).
class UnimodularScalar {
 public:
  explicit UnimodularScalar(Complex value);
  Complex value() const noexcept { return value_; }

 private:
  Complex value_;
};

/// gamma = (mu1 + mu2)/2 with mu1 = gamma + i sqrt(1 - gamma^2), mu2 = conj(mu1).
std::pair<UnimodularScalar, UnimodularScalar> unimodular_average_decomposition(double gamma);

/// D(lambda x) computed directly and by splitting lambda = a1 + i a2 into
/// floor and fractional parts, the fractional parts written as averages of
/// unimodular scalars; the difference is normalized by max(1, |lambda| ||x||).
Check complex_homogeneity_via_decomposition(const LinearOperator& D, Complex lambda,
                                            const ComplexMatrix& x, double tol);

/// Scaled triple residual at level l. For expanding schemes with base b:
///   b^-3l || f(b^3l {xyz}) - {f(b^l x) h(b^l y) h(b^l z)} - ... ||
/// and for contractive schemes
///   b^3l  || f({xyz}/b^3l) - {f(x/b^l) h(y/b^l) h(z/b^l)} - ... ||.
double derivation_limit_residual(const PerturbedMap& f, const PerturbedMap& h, Scheme scheme,
                                 const ComplexMatrix& x, const ComplexMatrix& y,
                                 const ComplexMatrix& z, int level);

/// max theta_derivation_residual / max(1, ||x|| ||y|| ||z||) over the probe
/// triples (x_i, x_{i+1}, x_{i+2}).
Check certify_theta_derivation(const LinearOperator& D, const LinearOperator& theta,
                               std::span<const ComplexMatrix> probes, double tol,
                               unsigned threads = 1);

}  // namespace tristab::stability

#endif  // TRISTAB_STABILITY_HPP
