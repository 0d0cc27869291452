#include "tristab/stability.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "tristab/parallel.hpp"
#include "tristab/random.hpp"

namespace tristab::stability {

using linalg::norm;
using triple::triple_product;

namespace {

// Arguments whose norm would pass this are treated as overflow.
constexpr double kScaledNormLimit = 1e150;
// A custom series whose partial sum passes this is declared divergent.
constexpr double kDivergentSum = 1e100;

std::string format_p(double p) {
  std::ostringstream out;
  out << p;
  return out.str();
}

std::string gate_condition(Scheme scheme) {
  switch (scheme) {
    case Scheme::kCauchy2:
      return "cauchy2 requires p < 1 so that sum_{j>=0} 2^-j phi(2^j x, 2^j y, 2^j z) converges";
    case Scheme::kCauchy2Contractive:
      return "cauchy2-contractive requires p > 1 so that sum_{j>=1} 2^j phi(2^-j x, 2^-j y, 2^-j z) "
             "converges";
    case Scheme::kJensen3:
      return "jensen3 requires p < 1 so that sum_{j>=0} 3^-j phi(3^j x, 3^j y, 3^j z) converges";
    case Scheme::kJensen3Contractive:
      return "jensen3-contractive requires p > 3 so that the summability condition "
             "sum_{j>=0} 3^(3j) phi(x/3^j, y/3^j, z/3^j) < infinity holds";
  }
  return {};
}

// Weight and argument scale of term j in the scheme's phi~ series.
struct SeriesTerm {
  double weight;
  double scale;
};

SeriesTerm series_term(Scheme scheme, int j) {
  const double b = scheme_base(scheme);
  const double bj = std::pow(b, j);
  if (is_contractive(scheme)) return {bj, 1.0 / bj};
  return {1.0 / bj, bj};
}

int series_start(Scheme scheme) { return scheme == Scheme::kCauchy2Contractive ? 1 : 0; }

template <typename TermFn>
double sum_series(int start, TermFn term, const SeriesOptions& options, std::string_view what) {
  double sum = 0.0;
  for (int j = start; j < start + options.max_terms; ++j) {
    const double t = term(j);
    if (!std::isfinite(t) || t < 0.0) {
      throw GateViolation(std::string(what) + ": series term " + std::to_string(j) +
                          " is not a finite nonnegative number");
    }
    sum += t;
    if (!(sum <= kDivergentSum)) {
      throw GateViolation(std::string(what) + ": partial sums diverge");
    }
    if (t < options.tol * (sum + options.tol)) return sum;
  }
  throw GateViolation(std::string(what) + ": no decay after " + std::to_string(options.max_terms) +
                      " terms");
}

double series_at(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                 const ComplexMatrix& y, const ComplexMatrix& z, const SeriesOptions& options) {
  auto term = [&](int j) {
    const SeriesTerm st = series_term(scheme, j);
    const Complex s{st.scale, 0.0};
    const ComplexMatrix sx = linalg::scalar_mul(s, x);
    const ComplexMatrix sy = linalg::scalar_mul(s, y);
    const ComplexMatrix sz = linalg::scalar_mul(s, z);
    if (!sx.is_finite() || !sy.is_finite() || !sz.is_finite()) {
      throw GateViolation("phi_tilde: arguments overflow at term " + std::to_string(j) +
                          " before the series decays");
    }
    return st.weight * phi(sx, sy, sz);
  };
  return sum_series(series_start(scheme), term, options,
                    std::string("phi_tilde(") + std::string(to_string(scheme)) + ")");
}

// Custom control functions also get the stronger cubic-weight condition
// checked before the jensen3-contractive bound series is summed.
void check_custom_gate(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                       const ComplexMatrix& y, const ComplexMatrix& z,
                       const SeriesOptions& options) {
  if (scheme != Scheme::kJensen3Contractive) return;
  auto term = [&](int j) {
    const double s = std::pow(3.0, -j);
    return std::pow(27.0, j) * phi(linalg::scalar_mul(s, x), linalg::scalar_mul(s, y),
                                   linalg::scalar_mul(s, z));
  };
  try {
    sum_series(0, term, options, "summability gate");
  } catch (const GateViolation& e) {
    throw GateViolation(gate_condition(scheme) + " (" + e.what() + ")");
  }
}

double closed_form_factor(Scheme scheme, double p) {
  switch (scheme) {
    case Scheme::kCauchy2: return 1.0 / (1.0 - std::pow(2.0, p - 1.0));
    case Scheme::kCauchy2Contractive: {
      const double r = std::pow(2.0, 1.0 - p);
      return r / (1.0 - r);
    }
    case Scheme::kJensen3: return 1.0 / (1.0 - std::pow(3.0, p - 1.0));
    case Scheme::kJensen3Contractive: return 1.0 / (1.0 - std::pow(3.0, 1.0 - p));
  }
  return 0.0;
}

template <typename PhiTilde>
double bound_from(Scheme scheme, const ComplexMatrix& x, PhiTilde&& tilde) {
  const std::size_t n = x.dim();
  const ComplexMatrix zero(n);
  switch (scheme) {
    case Scheme::kCauchy2:
    case Scheme::kCauchy2Contractive:
      return 0.5 * tilde(x, x, zero);
    case Scheme::kJensen3: {
      const ComplexMatrix neg = linalg::scalar_mul(-1.0, x);
      const ComplexMatrix triple_x = linalg::scalar_mul(3.0, x);
      return (tilde(x, neg, zero) + tilde(neg, triple_x, zero)) / 3.0;
    }
    case Scheme::kJensen3Contractive: {
      const ComplexMatrix third = linalg::scalar_mul(1.0 / 3.0, x);
      const ComplexMatrix neg_third = linalg::scalar_mul(-1.0 / 3.0, x);
      return tilde(third, neg_third, zero) + tilde(neg_third, x, zero);
    }
  }
  return 0.0;
}

std::string normalize_token(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

ComplexMatrix scaled(const ComplexMatrix& x, double s) { return linalg::scalar_mul(s, x); }

}  // namespace

// -- schemes --------------------------------------------------------------------

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::kCauchy2: return "cauchy2";
    case Scheme::kCauchy2Contractive: return "cauchy2-contractive";
    case Scheme::kJensen3: return "jensen3";
    case Scheme::kJensen3Contractive: return "jensen3-contractive";
  }
  return "unknown";
}

std::string_view to_string(HypothesisForm form) noexcept {
  return form == HypothesisForm::kCauchy ? "cauchy" : "jensen";
}

Scheme parse_scheme(std::string_view text) {
  const std::string key = normalize_token(text);
  if (key == "cauchy2") return Scheme::kCauchy2;
  if (key == "cauchy2contractive") return Scheme::kCauchy2Contractive;
  if (key == "jensen3") return Scheme::kJensen3;
  if (key == "jensen3contractive") return Scheme::kJensen3Contractive;
  throw std::invalid_argument("unknown scheme \"" + std::string(text) +
                              "\" (expected cauchy2, cauchy2-contractive, jensen3, "
                              "jensen3-contractive)");
}

HypothesisForm hypothesis_form(Scheme scheme) noexcept {
  return (scheme == Scheme::kCauchy2 || scheme == Scheme::kCauchy2Contractive)
             ? HypothesisForm::kCauchy
             : HypothesisForm::kJensen;
}

double scheme_base(Scheme scheme) noexcept {
  return hypothesis_form(scheme) == HypothesisForm::kCauchy ? 2.0 : 3.0;
}

bool is_contractive(Scheme scheme) noexcept {
  return scheme == Scheme::kCauchy2Contractive || scheme == Scheme::kJensen3Contractive;
}

double convergence_rate(Scheme scheme, double p) {
  const double b = scheme_base(scheme);
  return is_contractive(scheme) ? std::pow(b, 1.0 - p) : std::pow(b, p - 1.0);
}

void check_gate(Scheme scheme, double p) {
  if (!std::isfinite(p) || p < 0.0) {
    throw GateViolation("exponent p must be finite and >= 0 (got " + format_p(p) + ")");
  }
  bool ok = false;
  switch (scheme) {
    case Scheme::kCauchy2:
    case Scheme::kJensen3: ok = p < 1.0; break;
    case Scheme::kCauchy2Contractive: ok = p > 1.0; break;
    case Scheme::kJensen3Contractive: ok = p > 3.0; break;
  }
  if (ok) return;
  std::string message = "summability gate violated: " + gate_condition(scheme) + "; got p = " +
                        format_p(p);
  if (p == 1.0) message += " (no stability result exists for p = 1)";
  throw GateViolation(message);
}

// -- control functions ----------------------------------------------------------

double power_of_norm(double norm_value, double p) {
  if (norm_value == 0.0) return 0.0;
  return std::pow(norm_value, p);
}

ControlFunction ControlFunction::power_type(double eps, double p) {
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("ControlFunction: eps must be finite and >= 0");
  if (!(p >= 0.0) || !std::isfinite(p))
    throw std::invalid_argument("ControlFunction: p must be finite and >= 0");
  ControlFunction phi;
  phi.eps_ = eps;
  phi.p_ = p;
  return phi;
}

ControlFunction ControlFunction::custom(Callable fn) {
  if (!fn) throw std::invalid_argument("ControlFunction: empty callable");
  ControlFunction phi;
  phi.custom_ = std::move(fn);
  return phi;
}

double ControlFunction::operator()(const ComplexMatrix& x, const ComplexMatrix& y,
                                   const ComplexMatrix& z) const {
  if (custom_) {
    const double v = custom_(x, y, z);
    if (!(v >= 0.0)) throw std::domain_error("ControlFunction: custom phi returned a negative value");
    return v;
  }
  return from_norms(norm(x), norm(y), norm(z));
}

double ControlFunction::from_norms(double nx, double ny, double nz) const {
  if (custom_) throw std::logic_error("ControlFunction::from_norms: custom control function");
  return eps_ * (power_of_norm(nx, p_) + power_of_norm(ny, p_) + power_of_norm(nz, p_));
}

double phi_tilde(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                 const ComplexMatrix& y, const ComplexMatrix& z, SeriesOptions options) {
  if (phi.is_power_type()) {
    check_gate(scheme, phi.p());
    return phi(x, y, z) * closed_form_factor(scheme, phi.p());
  }
  check_custom_gate(phi, scheme, x, y, z, options);
  return series_at(phi, scheme, x, y, z, options);
}

double phi_tilde_series(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                        const ComplexMatrix& y, const ComplexMatrix& z, SeriesOptions options) {
  if (phi.is_power_type()) {
    check_gate(scheme, phi.p());
  } else {
    check_custom_gate(phi, scheme, x, y, z, options);
  }
  return series_at(phi, scheme, x, y, z, options);
}

double hyers_bound(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                   SeriesOptions options) {
  return bound_from(scheme, x, [&](const auto& a, const auto& b, const auto& c) {
    return phi_tilde(phi, scheme, a, b, c, options);
  });
}

double hyers_bound_series(const ControlFunction& phi, Scheme scheme, const ComplexMatrix& x,
                          SeriesOptions options) {
  return bound_from(scheme, x, [&](const auto& a, const auto& b, const auto& c) {
    return phi_tilde_series(phi, scheme, a, b, c, options);
  });
}

double corollary_constant(Scheme scheme, double eps, double p) {
  check_gate(scheme, p);
  switch (scheme) {
    case Scheme::kCauchy2:
    case Scheme::kCauchy2Contractive:
      return 2.0 * eps / std::abs(2.0 - std::pow(2.0, p));
    case Scheme::kJensen3: {
      const double t = std::pow(3.0, p);
      return (3.0 + t) / (3.0 - t) * eps;
    }
    case Scheme::kJensen3Contractive: {
      const double t = std::pow(3.0, p);
      return (t + 3.0) / (t - 3.0) * eps;
    }
  }
  return 0.0;
}

// -- perturbed maps -------------------------------------------------------------

PerturbedMap::PerturbedMap(LinearOperator base, NoiseSpec noise)
    : base_(std::move(base)), spec_(noise) {
  if (!(spec_.amplitude >= 0.0) || !std::isfinite(spec_.amplitude))
    throw std::invalid_argument("PerturbedMap: amplitude must be finite and >= 0");
  if (!(spec_.exponent >= 0.0) || !std::isfinite(spec_.exponent))
    throw std::invalid_argument("PerturbedMap: exponent must be finite and >= 0");
  Rng rng(spec_.seed);
  ComplexMatrix w = random_matrix(base_.dim(), rng);
  w *= 1.0 / norm(w);
  direction_ = std::move(w);
  alpha_ = rng.uniform(1.0, 2.0);
  beta_ = rng.uniform(1.0, 2.0);
}

ComplexMatrix PerturbedMap::noise(const ComplexMatrix& x) const {
  const double nx = norm(x);
  if (nx == 0.0 || spec_.amplitude == 0.0) return ComplexMatrix(x.dim());
  Complex trace{};
  for (std::size_t i = 0; i < x.dim(); ++i) trace += x(i, i);
  const double s = std::sin(alpha_ + beta_ * trace.real() / nx);
  return linalg::scalar_mul(spec_.amplitude * power_of_norm(nx, spec_.exponent) * s, direction_);
}

ComplexMatrix PerturbedMap::operator()(const ComplexMatrix& x) const {
  ComplexMatrix out = base_(x);
  if (spec_.amplitude != 0.0) out += noise(x);
  return out;
}

double perturbation_amplitude(double eps, double p, HypothesisForm form) {
  const double k = p <= 1.0 ? 1.0 : std::pow(2.0, p - 1.0);
  if (form == HypothesisForm::kCauchy) return eps / (k + 1.0);
  return eps / (std::pow(2.0, 1.0 - p) * k + 1.0);
}

PerturbedMap make_perturbation(const LinearOperator& base, double eps, double p,
                               HypothesisForm form, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw std::invalid_argument("make_perturbation: eps must be >= 0");
  if (!(p >= 0.0)) throw std::invalid_argument("make_perturbation: p must be >= 0");
  if (form == HypothesisForm::kCauchy && p == 1.0)
    throw GateViolation("make_perturbation: p = 1 admits no Cauchy stability bound");
  return PerturbedMap(base, NoiseSpec{perturbation_amplitude(eps, p, form), p, seed});
}

namespace {

void record(HypothesisRatio& r, double lhs, double phi) {
  ++r.samples;
  if (phi > 0.0) {
    r.max_ratio = std::max(r.max_ratio, lhs / phi);
  } else {
    r.max_absolute = std::max(r.max_absolute, lhs);
  }
}

double equation_gap(const PerturbedMap& f, HypothesisForm form, Complex mu, const ComplexMatrix& x,
                    const ComplexMatrix& y, const ComplexMatrix& fx, const ComplexMatrix& fy) {
  ComplexMatrix mixed = linalg::add(linalg::scalar_mul(mu, x), y);
  ComplexMatrix gap;
  if (form == HypothesisForm::kCauchy) {
    gap = f(mixed);
  } else {
    gap = linalg::scalar_mul(2.0, f(linalg::scalar_mul(0.5, mixed)));
  }
  gap -= linalg::scalar_mul(mu, fx);
  gap -= fy;
  return norm(gap);
}

}  // namespace

HypothesisReport verify_hypotheses(const PerturbedMap& f, const PerturbedMap& h,
                                   const ControlFunction& phi, HypothesisForm form,
                                   std::span<const ComplexMatrix> probes,
                                   std::span<const Complex> mu_samples) {
  if (probes.empty()) throw std::invalid_argument("verify_hypotheses: probes must be nonempty");
  for (const auto& mu : mu_samples) static_cast<void>(UnimodularScalar(mu));

  const std::size_t n = probes.size();
  const std::size_t dim = probes.front().dim();
  std::vector<ComplexMatrix> fx, hx;
  fx.reserve(n);
  hx.reserve(n);
  for (const auto& x : probes) {
    fx.push_back(f(x));
    hx.push_back(h(x));
  }
  const ComplexMatrix zero(dim);
  const ComplexMatrix f_zero = f(zero);
  const ComplexMatrix h_zero = h(zero);

  HypothesisReport report;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1) % n;
    for (int pick = 0; pick < 2; ++pick) {
      const ComplexMatrix& y = pick == 0 ? probes[next] : zero;
      const ComplexMatrix& fy = pick == 0 ? fx[next] : f_zero;
      const ComplexMatrix& hy = pick == 0 ? hx[next] : h_zero;
      const double bound = phi(probes[i], y, zero);
      for (const auto& mu : mu_samples) {
        record(report.f_equation, equation_gap(f, form, mu, probes[i], y, fx[i], fy), bound);
        record(report.h_equation, equation_gap(h, form, mu, probes[i], y, hx[i], hy), bound);
      }
    }
    const std::size_t j = (i + 1) % n;
    const std::size_t k = (i + 2) % n;
    ComplexMatrix gap = f(triple_product(probes[i], probes[j], probes[k]));
    gap -= triple_product(fx[i], hx[j], hx[k]);
    gap -= triple_product(hx[i], fx[j], hx[k]);
    gap -= triple_product(hx[i], hx[j], fx[k]);
    record(report.triple, norm(gap), phi(probes[i], probes[j], probes[k]));
  }
  return report;
}

// -- direct method --------------------------------------------------------------

ComplexMatrix approximant(const PerturbedMap& f, Scheme scheme, const ComplexMatrix& x, int level) {
  if (level < 0) throw std::invalid_argument("approximant: level must be >= 0");
  const double s = std::pow(scheme_base(scheme), level);
  if (!(s <= kScaledNormLimit)) {
    throw std::overflow_error("direct method: scale factor " + std::to_string(scheme_base(scheme)) +
                              "^" + std::to_string(level) + " overflows; reduce l_max");
  }
  if (is_contractive(scheme)) return scaled(f(scaled(x, 1.0 / s)), s);
  if (!(norm(x) * s <= kScaledNormLimit)) {
    throw std::overflow_error("direct method: scaled argument norm exceeds 1e150 at level " +
                              std::to_string(level) + "; reduce l_max");
  }
  ComplexMatrix out = f(scaled(x, s));
  for (auto& c : out.row_major()) c /= s;
  return out;
}

DirectMethodResult direct_method(const PerturbedMap& f, Scheme scheme, const ComplexMatrix& x,
                                 DirectMethodOptions options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("direct_method: tol must be positive");
  if (options.l_max < 1) throw std::invalid_argument("direct_method: l_max must be >= 1");
  DirectMethodResult result;
  ComplexMatrix previous = approximant(f, scheme, x, 0);
  for (int l = 0; l < options.l_max; ++l) {
    ComplexMatrix next = approximant(f, scheme, x, l + 1);
    const double diff = norm(linalg::subtract(next, previous));
    result.differences.push_back(diff);
    if (diff <= options.tol * std::max(1.0, norm(previous))) {
      result.value = std::move(next);
      result.levels = l + 1;
      result.converged = true;
      return result;
    }
    previous = std::move(next);
  }
  result.value = std::move(previous);
  result.levels = options.l_max;
  result.converged = false;
  return result;
}

std::vector<double> successive_ratios(std::span<const double> differences, std::size_t window) {
  std::vector<double> ratios;
  if (differences.size() < 2) return ratios;
  const std::size_t available = differences.size() - 1;
  const std::size_t first = available > window ? available - window : 0;
  for (std::size_t k = first; k < available; ++k) {
    ratios.push_back(differences[k + 1] / differences[k]);
  }
  return ratios;
}

RecoveryFailure::RecoveryFailure(const std::string& what, std::optional<ComplexMatrix> worst_probe,
                                 double worst_residual)
    : std::runtime_error(what), worst_probe_(std::move(worst_probe)), worst_residual_(worst_residual) {}

RecoveredMap recover_linear_map(const PerturbedMap& f, Scheme scheme,
                                const RecoveryOptions& options) {
  const std::size_t n = f.dim();
  const std::size_t basis = n * n;
  std::vector<DirectMethodResult> columns(basis);
  const DirectMethodOptions basis_options{options.tol / 16.0, options.l_max};
  parallel_for(basis, options.threads, [&](std::size_t k) {
    columns[k] = direct_method(f, scheme, ComplexMatrix::unit(n, k % n, k / n), basis_options);
  });

  ComplexMatrix coeffs(basis);
  int max_levels = 0;
  for (std::size_t k = 0; k < basis; ++k) {
    if (!columns[k].converged) {
      throw RecoveryFailure("recover_linear_map: direct method did not converge on basis element " +
                                std::to_string(k) + " within l_max = " +
                                std::to_string(options.l_max),
                            ComplexMatrix::unit(n, k % n, k / n), columns[k].differences.back());
    }
    max_levels = std::max(max_levels, columns[k].levels);
    const auto column = linalg::vec(columns[k].value);
    for (std::size_t i = 0; i < basis; ++i) coeffs(i, k) = column[i];
  }
  LinearOperator op = LinearOperator::tabulated(n, std::move(coeffs));

  const auto probes = make_probes(n, std::max<std::size_t>(options.certification_probes, 1),
                                  options.seed);
  std::vector<double> residuals(probes.size());
  std::vector<char> converged(probes.size());
  const DirectMethodOptions probe_options{options.tol, options.l_max};
  parallel_for(probes.size(), options.threads, [&](std::size_t i) {
    const DirectMethodResult direct = direct_method(f, scheme, probes[i], probe_options);
    converged[i] = direct.converged ? 1 : 0;
    residuals[i] = norm(linalg::subtract(op(probes[i]), direct.value)) /
                   (options.tol * std::max(1.0, norm(probes[i])));
  });

  std::size_t worst = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!converged[i]) {
      throw RecoveryFailure("recover_linear_map: direct method did not converge on a "
                            "certification probe",
                            probes[i], residuals[i]);
    }
    if (residuals[i] > residuals[worst]) worst = i;
  }
  if (!(residuals[worst] <= 10.0)) {
    throw RecoveryFailure("recover_linear_map: linearity certificate failed (residual " +
                              std::to_string(residuals[worst]) + " x tol x max(1, ||x||))",
                          probes[worst], residuals[worst]);
  }
  return {std::move(op), residuals[worst], max_levels};
}

// -- verification ----------------------------------------------------------------

BoundReport verify_stability_bound(const PerturbedMap& f, const LinearOperator& recovered,
                                   const ControlFunction& phi, Scheme scheme,
                                   std::span<const ComplexMatrix> probes, unsigned threads) {
  if (probes.empty()) throw std::invalid_argument("verify_stability_bound: probes must be nonempty");
  BoundReport report;
  report.rows.resize(probes.size());
  parallel_for(probes.size(), threads, [&](std::size_t i) {
    const ComplexMatrix& x = probes[i];
    ProbeRow row;
    row.norm_x = norm(x);
    row.bound = hyers_bound(phi, scheme, x);
    row.error = norm(linalg::subtract(f(x), recovered(x)));
    if (row.bound > 0.0) {
      row.ratio = row.error / row.bound;
    } else {
      // a zero bound means f is exactly linear; only rounding may remain
      row.ratio = row.error <= kZeroBoundRounding * std::max(1.0, row.norm_x)
                      ? 0.0
                      : std::numeric_limits<double>::infinity();
    }
    report.rows[i] = row;
  });
  for (const auto& row : report.rows) report.max_ratio = std::max(report.max_ratio, row.ratio);
  return report;
}

Check verify_s1_homogeneity(const LinearOperator& D, std::span<const ComplexMatrix> probes,
                            std::span<const Complex> mu_samples, double tol) {
  double worst = 0.0;
  for (const auto& mu : mu_samples) static_cast<void>(UnimodularScalar(mu));
  for (const auto& x : probes) {
    const ComplexMatrix dx = D(x);
    const double scale = std::max(1.0, norm(x));
    for (const auto& mu : mu_samples) {
      const double gap = norm(linalg::subtract(D(linalg::scalar_mul(mu, x)), linalg::scalar_mul(mu, dx)));
      worst = std::max(worst, gap / scale);
    }
  }
  return triple::make_check(worst, tol);
}

UnimodularScalar::UnimodularScalar(Complex value) : value_(value) {
  if (!(std::abs(std::abs(value) - 1.0) <= 1e-12)) {
    throw std::invalid_argument("UnimodularScalar: |mu| must equal 1 (got " +
                                std::to_string(std::abs(value)) + ")");
  }
}

std::pair<UnimodularScalar, UnimodularScalar> unimodular_average_decomposition(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::out_of_range("unimodular_average_decomposition: gamma must lie in [0, 1)");
  }
  const Complex mu{gamma, std::sqrt(1.0 - gamma * gamma)};
  return {UnimodularScalar(mu), UnimodularScalar(std::conj(mu))};
}

Check complex_homogeneity_via_decomposition(const LinearOperator& D, Complex lambda,
                                            const ComplexMatrix& x, double tol) {
  const ComplexMatrix direct = D(linalg::scalar_mul(lambda, x));
  const ComplexMatrix dx = D(x);

  const double parts[2] = {lambda.real(), lambda.imag()};
  // middle line of the chain: floor(a) D(x) + D(mu1 x + mu2 x)/2
  ComplexMatrix via_average(x.dim());
  // last line: floor(a) D(x) + (mu1 D(x) + mu2 D(x))/2
  ComplexMatrix via_unimodular(x.dim());
  for (int k = 0; k < 2; ++k) {
    const double whole = std::floor(parts[k]);
    const auto [mu1, mu2] = unimodular_average_decomposition(parts[k] - whole);
    const Complex unit = k == 0 ? Complex{1.0, 0.0} : Complex{0.0, 1.0};

    ComplexMatrix average = D(linalg::add(linalg::scalar_mul(mu1.value(), x),
                                          linalg::scalar_mul(mu2.value(), x)));
    average *= 0.5;
    average += linalg::scalar_mul(whole, dx);
    via_average += linalg::scalar_mul(unit, average);

    ComplexMatrix rotated = linalg::scalar_mul(0.5 * mu1.value(), dx);
    rotated += linalg::scalar_mul(0.5 * mu2.value(), dx);
    rotated += linalg::scalar_mul(whole, dx);
    via_unimodular += linalg::scalar_mul(unit, rotated);
  }
  const double scale = std::max(1.0, std::abs(lambda) * norm(x));
  const double gap = std::max(norm(linalg::subtract(direct, via_average)),
                              norm(linalg::subtract(direct, via_unimodular)));
  return triple::make_check(gap / scale, tol);
}

double derivation_limit_residual(const PerturbedMap& f, const PerturbedMap& h, Scheme scheme,
                                 const ComplexMatrix& x, const ComplexMatrix& y,
                                 const ComplexMatrix& z, int level) {
  if (level < 0) throw std::invalid_argument("derivation_limit_residual: level must be >= 0");
  const double s = std::pow(scheme_base(scheme), level);
  const double s3 = s * s * s;
  const ComplexMatrix xyz = triple_product(x, y, z);
  if (!(s3 <= kScaledNormLimit) || !(norm(xyz) * s3 <= kScaledNormLimit)) {
    throw std::overflow_error("derivation_limit_residual: scaled argument overflows at level " +
                              std::to_string(level) + "; reduce the level");
  }
  const bool contract = is_contractive(scheme);
  const double arg_scale = contract ? 1.0 / s : s;
  const double product_scale = contract ? 1.0 / s3 : s3;

  const ComplexMatrix sx = scaled(x, arg_scale);
  const ComplexMatrix sy = scaled(y, arg_scale);
  const ComplexMatrix sz = scaled(z, arg_scale);
  const ComplexMatrix fx = f(sx), fy = f(sy), fz = f(sz);
  const ComplexMatrix hx = h(sx), hy = h(sy), hz = h(sz);

  ComplexMatrix gap = f(scaled(xyz, product_scale));
  gap -= triple_product(fx, hy, hz);
  gap -= triple_product(hx, fy, hz);
  gap -= triple_product(hx, hy, fz);
  const double raw = norm(gap);
  return contract ? raw * s3 : raw / s3;
}

Check certify_theta_derivation(const LinearOperator& D, const LinearOperator& theta,
                               std::span<const ComplexMatrix> probes, double tol, unsigned threads) {
  if (probes.empty()) throw std::invalid_argument("certify_theta_derivation: probes must be nonempty");
  const std::size_t n = probes.size();
  std::vector<double> residuals(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto& x = probes[i];
    const auto& y = probes[(i + 1) % n];
    const auto& z = probes[(i + 2) % n];
    residuals[i] = triple::theta_derivation_residual(D, theta, x, y, z) /
                   triple::residual_scale({&x, &y, &z});
  });
  return triple::make_check(*std::max_element(residuals.begin(), residuals.end()), tol);
}

}  // namespace tristab::stability
