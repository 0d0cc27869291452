#include "tristab/lab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json_text.hpp"
#include "tristab/linear_operator.hpp"
#include "tristab/parallel.hpp"
#include "tristab/random.hpp"
#include "tristab/triple.hpp"

namespace tristab::lab {

using nlohmann::json;
using stability::HypothesisForm;
using triple::LinearOperator;

namespace {

constexpr std::size_t kMaxDim = 32;
constexpr double kBoundLimit = 1.0 + kBoundSlack;
constexpr double kHypothesisAbsoluteTol = 1e-9;
constexpr double kGammaTol = 1e-15;
constexpr double kBoundsTableTol = 1e-12;
constexpr int kDerivationLevelCap = 40;
constexpr int kDerivationLevelFloor = 6;

const std::vector<linalg::Complex> kLambdas = {{2.0, 0.0}, {0.0, 1.0}, {0.9, 2.3}};
const std::vector<double> kGammas = {0.0, 0.25, 0.5, 0.9};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// -- JSON helpers -----------------------------------------------------------------

double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json complex_to_json(linalg::Complex c) { return json::array({c.real(), c.imag()}); }

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

std::string_view kind_name(GeneratorSpec::Kind kind) {
  switch (kind) {
    case GeneratorSpec::Kind::kSeeded: return "seeded";
    case GeneratorSpec::Kind::kIdentity: return "identity";
    case GeneratorSpec::Kind::kExplicit: return "explicit";
  }
  return "seeded";
}

GeneratorSpec::Kind parse_kind(const std::string& text) {
  if (text == "seeded") return GeneratorSpec::Kind::kSeeded;
  if (text == "identity") return GeneratorSpec::Kind::kIdentity;
  if (text == "explicit") return GeneratorSpec::Kind::kExplicit;
  throw std::invalid_argument("config: generator kind must be seeded, identity or explicit (got \"" +
                              text + "\")");
}

json generator_to_json(const GeneratorSpec& g) {
  json j;
  j["kind"] = kind_name(g.kind);
  j["a_norm"] = g.a_norm;
  if (g.u) j["u"] = detail::matrix_to_json(*g.u);
  if (g.a) j["a"] = detail::matrix_to_json(*g.a);
  return j;
}

GeneratorSpec generator_from_json(const json& j, std::size_t dim) {
  GeneratorSpec g;
  if (j.is_string()) {
    g.kind = parse_kind(j.get<std::string>());
    return g;
  }
  if (!j.is_object()) throw std::invalid_argument("config: generator must be a string or object");
  reject_unknown(j, {"kind", "a_norm", "u", "a"}, "config.generator");
  if (j.contains("kind")) g.kind = parse_kind(j.at("kind").get<std::string>());
  if (j.contains("a_norm")) g.a_norm = j.at("a_norm").get<double>();
  if (j.contains("u")) g.u = detail::matrix_from_json(dim, j.at("u"));
  if (j.contains("a")) g.a = detail::matrix_from_json(dim, j.at("a"));
  return g;
}

json config_to_value(const ExperimentConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["scheme"] = stability::to_string(c.scheme);
  j["eps"] = c.eps;
  j["p"] = c.p;
  j["seed"] = c.seed;
  j["probe_count"] = c.probe_count;
  j["tol"] = c.tol;
  j["l_max"] = c.l_max;
  j["generator"] = generator_to_json(c.generator);
  j["record_timings"] = c.record_timings;
  return j;
}

ExperimentConfig config_from_value(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  reject_unknown(j, {"dim", "scheme", "eps", "p", "seed", "probe_count", "tol", "l_max", "generator",
                     "record_timings"},
                 "config");
  ExperimentConfig c;
  if (j.contains("dim")) c.dim = j.at("dim").get<std::size_t>();
  if (j.contains("scheme")) c.scheme = stability::parse_scheme(j.at("scheme").get<std::string>());
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("p")) c.p = j.at("p").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("probe_count")) c.probe_count = j.at("probe_count").get<std::size_t>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("l_max")) c.l_max = j.at("l_max").get<int>();
  if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"), c.dim);
  if (j.contains("record_timings")) c.record_timings = j.at("record_timings").get<bool>();
  return c;
}

json axioms_to_value(const AxiomSummary& a) {
  json j;
  j["samples"] = a.samples;
  j["commutativity"] = a.commutativity;
  j["jordan_identity"] = a.jordan_identity;
  j["l_self_adjoint"] = a.l_self_adjoint;
  j["l_positivity"] = a.l_positivity;
  j["norm_identity"] = a.norm_identity;
  j["product_agreement"] = a.product_agreement;
  return j;
}

AxiomSummary axioms_from_value(const json& j) {
  AxiomSummary a;
  a.samples = j.at("samples").get<std::size_t>();
  a.commutativity = number_from_json(j.at("commutativity"));
  a.jordan_identity = number_from_json(j.at("jordan_identity"));
  a.l_self_adjoint = number_from_json(j.at("l_self_adjoint"));
  a.l_positivity = number_from_json(j.at("l_positivity"));
  a.norm_identity = number_from_json(j.at("norm_identity"));
  a.product_agreement = number_from_json(j.at("product_agreement"));
  return a;
}

json numbers_to_json(const std::vector<double>& values) {
  auto out = json::array();
  for (double v : values) out.push_back(v);
  return out;
}

std::vector<double> numbers_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number_from_json(v));
  return out;
}

json recovery_to_value(const RecoverySummary& r) {
  json j;
  j["recovered"] = r.recovered;
  j["failure"] = r.failure;
  j["hypothesis_f_ratio"] = r.hypothesis_f_ratio;
  j["hypothesis_h_ratio"] = r.hypothesis_h_ratio;
  j["hypothesis_f_absolute"] = r.hypothesis_f_absolute;
  j["hypothesis_h_absolute"] = r.hypothesis_h_absolute;
  j["triple_hypothesis_ratio"] = r.triple_hypothesis_ratio;
  j["hypothesis_samples"] = r.hypothesis_samples;
  j["recovery_error_D"] = r.recovery_error_D;
  j["recovery_error_theta"] = r.recovery_error_theta;
  j["linearity_certificate_D"] = r.linearity_certificate_D;
  j["linearity_certificate_theta"] = r.linearity_certificate_theta;
  j["levels_D"] = r.levels_D;
  j["levels_theta"] = r.levels_theta;
  j["corollary_constant"] = r.corollary_constant;
  j["bound_ratio_D"] = r.bound_ratio_D;
  j["bound_ratio_theta"] = r.bound_ratio_theta;
  j["expected_rate"] = r.expected_rate;
  j["rate_ratios"] = numbers_to_json(r.rate_ratios);
  j["s1_homogeneity"] = r.s1_homogeneity;
  auto samples = json::array();
  for (const auto& s : r.complex_homogeneity)
    samples.push_back({{"lambda", complex_to_json(s.lambda)}, {"residual", s.residual}});
  j["complex_homogeneity"] = samples;
  j["theta_derivation_certificate"] = r.theta_derivation_certificate;
  j["derivation_limit"] = numbers_to_json(r.derivation_limit);
  return j;
}

RecoverySummary recovery_from_value(const json& j) {
  RecoverySummary r;
  r.recovered = j.at("recovered").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.hypothesis_f_ratio = number_from_json(j.at("hypothesis_f_ratio"));
  r.hypothesis_h_ratio = number_from_json(j.at("hypothesis_h_ratio"));
  r.hypothesis_f_absolute = number_from_json(j.at("hypothesis_f_absolute"));
  r.hypothesis_h_absolute = number_from_json(j.at("hypothesis_h_absolute"));
  r.triple_hypothesis_ratio = number_from_json(j.at("triple_hypothesis_ratio"));
  r.hypothesis_samples = j.at("hypothesis_samples").get<std::size_t>();
  r.recovery_error_D = number_from_json(j.at("recovery_error_D"));
  r.recovery_error_theta = number_from_json(j.at("recovery_error_theta"));
  r.linearity_certificate_D = number_from_json(j.at("linearity_certificate_D"));
  r.linearity_certificate_theta = number_from_json(j.at("linearity_certificate_theta"));
  r.levels_D = j.at("levels_D").get<int>();
  r.levels_theta = j.at("levels_theta").get<int>();
  r.corollary_constant = number_from_json(j.at("corollary_constant"));
  r.bound_ratio_D = number_from_json(j.at("bound_ratio_D"));
  r.bound_ratio_theta = number_from_json(j.at("bound_ratio_theta"));
  r.expected_rate = number_from_json(j.at("expected_rate"));
  r.rate_ratios = numbers_from_json(j.at("rate_ratios"));
  r.s1_homogeneity = number_from_json(j.at("s1_homogeneity"));
  for (const auto& s : j.at("complex_homogeneity")) {
    r.complex_homogeneity.push_back(
        {detail::complex_from_json(s.at("lambda")), number_from_json(s.at("residual"))});
  }
  r.theta_derivation_certificate = number_from_json(j.at("theta_derivation_certificate"));
  r.derivation_limit = numbers_from_json(j.at("derivation_limit"));
  return r;
}

// -- checks -----------------------------------------------------------------------

void add_check(std::vector<CheckEntry>& checks, std::string name, double value, double tolerance) {
  checks.push_back({std::move(name), value, tolerance, value <= tolerance});
}

void add_axiom_checks(std::vector<CheckEntry>& checks, const AxiomSummary& a) {
  add_check(checks, "axioms.commutativity", a.commutativity, kCommutativityTol);
  add_check(checks, "axioms.jordan_identity", a.jordan_identity, kJordanIdentityTol);
  add_check(checks, "axioms.l_self_adjoint", a.l_self_adjoint, kPositivityTol);
  add_check(checks, "axioms.l_positivity", a.l_positivity, kPositivityTol);
  add_check(checks, "axioms.norm_identity", a.norm_identity, kNormIdentityTol);
  add_check(checks, "axioms.product_agreement", a.product_agreement, kProductAgreementTol);
}

std::vector<ComplexMatrix> axiom_elements(const ExperimentConfig& config) {
  Rng rng(derive_seed(config.seed, SeedStream::kAxioms));
  std::vector<ComplexMatrix> out;
  out.reserve(config.probe_count);
  for (std::size_t i = 0; i < config.probe_count; ++i) out.push_back(random_matrix(config.dim, rng));
  return out;
}

struct ExactPair {
  LinearOperator theta;
  LinearOperator D;
};

ExactPair build_exact_pair(const ExperimentConfig& config) {
  const std::size_t n = config.dim;
  Rng rng(derive_seed(config.seed, SeedStream::kGenerator));
  ComplexMatrix u = random_unitary(n, rng);
  ComplexMatrix a = random_skew_adjoint(n, rng, config.generator.a_norm);
  switch (config.generator.kind) {
    case GeneratorSpec::Kind::kSeeded:
      break;
    case GeneratorSpec::Kind::kIdentity:
      u = ComplexMatrix::identity(n);
      break;
    case GeneratorSpec::Kind::kExplicit:
      if (config.generator.u) u = *config.generator.u;
      if (config.generator.a) a = *config.generator.a;
      break;
  }
  LinearOperator theta = triple::make_triple_homomorphism(u);
  LinearOperator d = triple::make_triple_derivation(a);
  triple::CertificationOptions cert;
  cert.seed = derive_seed(config.seed, SeedStream::kCertification);
  LinearOperator D = triple::make_theta_derivation(theta, d, cert);
  return {std::move(theta), std::move(D)};
}

// Unit-norm copy of the probe on which the perturbation is largest relative
// to ||x||^p, so the successive differences sit well above rounding.
ComplexMatrix rate_probe(const stability::PerturbedMap& f, std::span<const ComplexMatrix> probes) {
  std::size_t best = 0;
  double best_s = -1.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double nx = linalg::norm(probes[i]);
    if (nx == 0.0) continue;
    const double s = linalg::norm(f.noise(probes[i])) / stability::power_of_norm(nx, f.spec().exponent);
    if (s > best_s) {
      best_s = s;
      best = i;
    }
  }
  return linalg::scalar_mul(1.0 / linalg::norm(probes[best]), probes[best]);
}

ComplexMatrix unit_copy(const ComplexMatrix& x) {
  const double nx = linalg::norm(x);
  return nx == 0.0 ? x : linalg::scalar_mul(1.0 / nx, x);
}

int derivation_levels(double rate) {
  if (!(rate > 0.0 && rate < 1.0)) return kDerivationLevelFloor;
  const int levels = static_cast<int>(std::floor(std::log(1e-12) / std::log(rate)));
  return std::clamp(levels, kDerivationLevelFloor, kDerivationLevelCap);
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

}  // namespace

// -- config -----------------------------------------------------------------------

void validate(const ExperimentConfig& c) {
  if (c.dim < 1 || c.dim > kMaxDim)
    throw std::invalid_argument("config: dim must lie in [1, " + std::to_string(kMaxDim) + "]");
  if (c.probe_count < 1) throw std::invalid_argument("config: probe_count must be >= 1");
  if (!std::isfinite(c.eps) || c.eps < 0.0)
    throw std::invalid_argument("config: eps must be finite and >= 0");
  if (!std::isfinite(c.p) || c.p < 0.0) throw std::invalid_argument("config: p must be finite and >= 0");
  if (!std::isfinite(c.tol) || !(c.tol > 0.0))
    throw std::invalid_argument("config: tol must be finite and > 0");
  if (c.l_max < 1) throw std::invalid_argument("config: l_max must be >= 1");
  if (!std::isfinite(c.generator.a_norm) || c.generator.a_norm < 0.0)
    throw std::invalid_argument("config: generator.a_norm must be finite and >= 0");
  for (const auto* m : {&c.generator.u, &c.generator.a}) {
    if (!*m) continue;
    if ((*m)->dim() != c.dim)
      throw std::invalid_argument("config: generator matrices must be dim x dim");
    if (!(*m)->is_finite()) throw std::invalid_argument("config: generator matrices must be finite");
  }
  stability::check_gate(c.scheme, c.p);
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  try {
    return config_from_value(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string config_to_json(const ExperimentConfig& config) {
  return detail::render_json(config_to_value(config));
}

// -- report -----------------------------------------------------------------------

bool StabilityReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckEntry& c) { return c.passed; });
}

std::vector<std::string> StabilityReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (c.passed) continue;
    out.push_back(c.name + ": value " + detail::format_double(c.value) + " exceeds tolerance " +
                  detail::format_double(c.tolerance));
  }
  return out;
}

unsigned resolve_threads() {
  const char* raw = std::getenv("TRIPLE_STAB_THREADS");
  if (raw == nullptr || *raw == '\0') return std::max(1u, std::thread::hardware_concurrency());
  const std::string_view text(raw);
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value == 0) {
    throw std::invalid_argument("TRIPLE_STAB_THREADS must be a positive integer (got \"" +
                                std::string(text) + "\")");
  }
  return value;
}

// -- axioms -----------------------------------------------------------------------

AxiomSummary summarize_axioms(std::span<const ComplexMatrix> elements, unsigned threads) {
  AxiomSummary summary;
  const std::size_t n = elements.size();
  summary.samples = n;
  if (n == 0) return summary;

  struct Row {
    double commutativity, jordan, self_adjoint, positivity, norm_identity, agreement;
  };
  std::vector<Row> rows(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto& a = elements[i];
    const auto& b = elements[(i + 1) % n];
    const auto& x = elements[(i + 2) % n];
    const auto& y = elements[(i + 3) % n];
    const auto& z = elements[(i + 4) % n];
    std::vector<ComplexMatrix> probes;
    probes.reserve(kPositivityProbes);
    for (std::size_t k = 0; k < kPositivityProbes; ++k) probes.push_back(elements[(i + 5 + k) % n]);
    const auto positivity = triple::check_L_positive(a, probes, kPositivityTol);
    rows[i] = {triple::check_commutativity(x, y, z, kCommutativityTol).residual,
               triple::check_jordan_identity(a, b, x, y, z, kJordanIdentityTol).residual,
               positivity.max_self_adjoint_violation,
               std::max(0.0, positivity.max_positivity_violation),
               triple::check_norm_identity(x, kNormIdentityTol).residual,
               triple::check_product_agreement(x, y, z, kProductAgreementTol).residual};
  });
  for (const auto& r : rows) {
    summary.commutativity = std::max(summary.commutativity, r.commutativity);
    summary.jordan_identity = std::max(summary.jordan_identity, r.jordan);
    summary.l_self_adjoint = std::max(summary.l_self_adjoint, r.self_adjoint);
    summary.l_positivity = std::max(summary.l_positivity, r.positivity);
    summary.norm_identity = std::max(summary.norm_identity, r.norm_identity);
    summary.product_agreement = std::max(summary.product_agreement, r.agreement);
  }
  return summary;
}

StabilityReport run_axiom_suite(const ExperimentConfig& config, const RunOptions& run) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  StabilityReport report;
  report.command = "axioms";
  report.config = config;
  const auto elements = axiom_elements(config);
  report.axioms = summarize_axioms(elements, run.threads);
  add_axiom_checks(report.checks, *report.axioms);
  if (config.record_timings) report.timings = Timings{seconds_since(start), 0.0};
  return report;
}

// -- recovery ---------------------------------------------------------------------

StabilityReport run_recovery(const ExperimentConfig& config, const RunOptions& run) {
  validate(config);
  StabilityReport report;
  report.command = "recover";
  report.config = config;
  Timings timings;

  auto start = std::chrono::steady_clock::now();
  const auto elements = axiom_elements(config);
  report.axioms = summarize_axioms(elements, run.threads);
  add_axiom_checks(report.checks, *report.axioms);
  timings.axioms_seconds = seconds_since(start);

  start = std::chrono::steady_clock::now();
  auto& checks = report.checks;
  RecoverySummary summary;
  const auto finish = [&]() {
    report.recovery = std::move(summary);
    if (config.record_timings) {
      timings.recovery_seconds = seconds_since(start);
      report.timings = timings;
    }
    return report;
  };

  const Scheme scheme = config.scheme;
  const HypothesisForm form = stability::hypothesis_form(scheme);
  const bool noisy = config.eps > 0.0;
  summary.expected_rate = stability::convergence_rate(scheme, config.p);
  summary.corollary_constant = stability::corollary_constant(scheme, config.eps, config.p);

  const ExactPair exact = build_exact_pair(config);
  const auto f = stability::make_perturbation(exact.D, config.eps, config.p, form,
                                              derive_seed(config.seed, SeedStream::kPerturbF));
  const auto h = stability::make_perturbation(exact.theta, config.eps, config.p, form,
                                              derive_seed(config.seed, SeedStream::kPerturbH));
  const auto phi = stability::ControlFunction::power_type(config.eps, config.p);
  const auto probes =
      make_probes(config.dim, config.probe_count, derive_seed(config.seed, SeedStream::kProbes));
  const auto mus = unimodular_samples(kUnimodularCount, derive_seed(config.seed, SeedStream::kUnimodular));

  const auto hyp = stability::verify_hypotheses(f, h, phi, form, probes, mus);
  summary.hypothesis_f_ratio = hyp.f_equation.max_ratio;
  summary.hypothesis_h_ratio = hyp.h_equation.max_ratio;
  summary.hypothesis_f_absolute = hyp.f_equation.max_absolute;
  summary.hypothesis_h_absolute = hyp.h_equation.max_absolute;
  summary.triple_hypothesis_ratio = hyp.triple.max_ratio;
  summary.hypothesis_samples = hyp.f_equation.samples;
  add_check(checks, "hypothesis.f_ratio", summary.hypothesis_f_ratio, kBoundLimit);
  add_check(checks, "hypothesis.h_ratio", summary.hypothesis_h_ratio, kBoundLimit);
  add_check(checks, "hypothesis.f_absolute", summary.hypothesis_f_absolute, kHypothesisAbsoluteTol);
  add_check(checks, "hypothesis.h_absolute", summary.hypothesis_h_absolute, kHypothesisAbsoluteTol);

  stability::RecoveryOptions options;
  options.tol = config.tol;
  options.l_max = config.l_max;
  options.seed = derive_seed(config.seed, SeedStream::kCertification);
  options.threads = run.threads;

  std::optional<stability::RecoveredMap> D_hat;
  std::optional<stability::RecoveredMap> theta_hat;
  try {
    D_hat = stability::recover_linear_map(f, scheme, options);
    theta_hat = stability::recover_linear_map(h, scheme, options);
  } catch (const stability::RecoveryFailure& e) {
    summary.failure = e.what();
  } catch (const std::overflow_error& e) {
    summary.failure = e.what();
  } catch (const linalg::NonConvergence& e) {
    summary.failure = e.what();
  }
  summary.recovered = D_hat.has_value() && theta_hat.has_value();
  checks.push_back({"recovery.converged", summary.recovered ? 0.0 : 1.0, 0.0, summary.recovered});
  if (!summary.recovered) return finish();

  summary.recovery_error_D = triple::max_coefficient_diff(D_hat->op, exact.D);
  summary.recovery_error_theta = triple::max_coefficient_diff(theta_hat->op, exact.theta);
  summary.linearity_certificate_D = D_hat->worst_certification;
  summary.linearity_certificate_theta = theta_hat->worst_certification;
  summary.levels_D = D_hat->max_levels;
  summary.levels_theta = theta_hat->max_levels;
  add_check(checks, "recovery.error_D", summary.recovery_error_D, kRecoveryTol);
  add_check(checks, "recovery.error_theta", summary.recovery_error_theta, kRecoveryTol);

  const auto bound_D = stability::verify_stability_bound(f, D_hat->op, phi, scheme, probes, run.threads);
  const auto bound_theta =
      stability::verify_stability_bound(h, theta_hat->op, phi, scheme, probes, run.threads);
  summary.bound_ratio_D = bound_D.max_ratio;
  summary.bound_ratio_theta = bound_theta.max_ratio;
  report.probes = bound_D.rows;
  add_check(checks, "bound.D", summary.bound_ratio_D, kBoundLimit);
  add_check(checks, "bound.theta", summary.bound_ratio_theta, kBoundLimit);

  if (noisy) {
    const auto direct = stability::direct_method(f, scheme, rate_probe(f, probes),
                                                 {config.tol, config.l_max});
    summary.rate_ratios = stability::successive_ratios(direct.differences, kRateWindow);
    if (!summary.rate_ratios.empty()) {
      double worst = 0.0;
      for (double r : summary.rate_ratios) worst = std::max(worst, std::abs(r - summary.expected_rate));
      add_check(checks, "rate.successive_ratio", worst, kRateTol);
    }
  }

  const auto s1_D = stability::verify_s1_homogeneity(D_hat->op, probes, mus, kHomogeneityTol);
  const auto s1_theta = stability::verify_s1_homogeneity(theta_hat->op, probes, mus, kHomogeneityTol);
  summary.s1_homogeneity = std::max(s1_D.residual, s1_theta.residual);
  add_check(checks, "homogeneity.s1", summary.s1_homogeneity, kHomogeneityTol);

  double gamma_gap = 0.0;
  for (double gamma : kGammas) {
    const auto [mu1, mu2] = stability::unimodular_average_decomposition(gamma);
    gamma_gap = std::max(gamma_gap, std::abs((mu1.value() + mu2.value()) / 2.0 - gamma));
  }
  add_check(checks, "homogeneity.gamma_decomposition", gamma_gap, kGammaTol);

  double complex_worst = 0.0;
  for (const auto& lambda : kLambdas) {
    double worst = 0.0;
    for (const auto& x : probes) {
      worst = std::max(worst, stability::complex_homogeneity_via_decomposition(D_hat->op, lambda, x,
                                                                               kHomogeneityTol)
                                  .residual);
    }
    summary.complex_homogeneity.push_back({lambda, worst});
    complex_worst = std::max(complex_worst, worst);
  }
  add_check(checks, "homogeneity.complex", complex_worst, kHomogeneityTol);

  summary.theta_derivation_certificate =
      stability::certify_theta_derivation(D_hat->op, theta_hat->op, probes, kDerivationTol, run.threads)
          .residual;
  add_check(checks, "derivation.theta_certificate", summary.theta_derivation_certificate,
            kDerivationTol);

  const ComplexMatrix x = unit_copy(probes[0]);
  const ComplexMatrix y = unit_copy(probes[1 % probes.size()]);
  const ComplexMatrix z = unit_copy(probes[2 % probes.size()]);
  const int levels = derivation_levels(summary.expected_rate);
  try {
    summary.derivation_limit.resize(static_cast<std::size_t>(levels) + 1);
    parallel_for(summary.derivation_limit.size(), run.threads, [&](std::size_t l) {
      summary.derivation_limit[l] =
          stability::derivation_limit_residual(f, h, scheme, x, y, z, static_cast<int>(l));
    });
  } catch (const std::overflow_error& e) {
    summary.derivation_limit.clear();
    summary.failure = e.what();
    checks.push_back({"derivation.limit_levels", 1.0, 0.0, false});
  }
  if (noisy && summary.derivation_limit.size() > static_cast<std::size_t>(kDecreasingFrom) + 1) {
    const auto& seq = summary.derivation_limit;
    double worst_step = 0.0;
    for (std::size_t l = kDecreasingFrom; l + 1 < seq.size(); ++l)
      worst_step = std::max(worst_step, seq[l + 1] / seq[l]);
    // strict decrease: every step ratio must stay below one
    checks.push_back({"derivation.limit_decreasing", worst_step, 1.0, worst_step < 1.0});
    const double last = seq[seq.size() - 1] / seq[seq.size() - 2];
    add_check(checks, "derivation.limit_rate", std::abs(last - summary.expected_rate), kRateTol);
  }
  return finish();
}

// -- bounds -----------------------------------------------------------------------

std::vector<BoundsRow> bounds_table(double eps, std::size_t dim) {
  if (!std::isfinite(eps) || eps < 0.0) throw std::invalid_argument("bounds_table: eps must be >= 0");
  if (dim < 1) throw std::invalid_argument("bounds_table: dim must be >= 1");
  const std::vector<std::pair<Scheme, std::vector<double>>> grid = {
      {Scheme::kCauchy2, {0.0, 0.25, 0.5, 0.75, 0.9}},
      {Scheme::kCauchy2Contractive, {1.5, 2.0, 3.0, 4.0}},
      {Scheme::kJensen3, {0.0, 0.25, 0.5, 0.75, 0.9}},
      {Scheme::kJensen3Contractive, {3.5, 4.0, 5.0, 6.0}},
  };
  const ComplexMatrix x = ComplexMatrix::identity(dim);
  std::vector<BoundsRow> rows;
  for (const auto& [scheme, ps] : grid) {
    for (double p : ps) {
      const auto phi = stability::ControlFunction::power_type(eps, p);
      BoundsRow row;
      row.scheme = scheme;
      row.p = p;
      row.eps = eps;
      row.closed_form = stability::corollary_constant(scheme, eps, p);
      row.series = stability::hyers_bound_series(phi, scheme, x);
      const double gap = std::abs(row.series - row.closed_form);
      row.relative_error = row.closed_form == 0.0 ? gap : gap / std::abs(row.closed_form);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bounds_to_csv(std::span<const BoundsRow> rows) {
  std::string out = "scheme,p,eps,closed_form,series,relative_error\n";
  for (const auto& r : rows) {
    out += std::string(stability::to_string(r.scheme)) + "," + csv_number(r.p) + "," +
           csv_number(r.eps) + "," + csv_number(r.closed_form) + "," + csv_number(r.series) + "," +
           csv_number(r.relative_error) + "\n";
  }
  return out;
}

std::string bounds_to_json(std::span<const BoundsRow> rows) {
  json j;
  j["command"] = "bounds";
  auto list = json::array();
  bool passed = true;
  for (const auto& r : rows) {
    passed = passed && r.relative_error <= kBoundsTableTol;
    list.push_back({{"scheme", stability::to_string(r.scheme)},
                    {"p", r.p},
                    {"eps", r.eps},
                    {"closed_form", r.closed_form},
                    {"series", r.series},
                    {"relative_error", r.relative_error}});
  }
  j["rows"] = list;
  j["tolerance"] = kBoundsTableTol;
  j["passed"] = passed;
  return detail::render_json(j);
}

// -- serialization ------------------------------------------------------------------

Format parse_format(std::string_view text) {
  if (text == "json") return Format::kJson;
  if (text == "csv") return Format::kCsv;
  throw std::invalid_argument("format must be json or csv (got \"" + std::string(text) + "\")");
}

std::string report_to_json(const StabilityReport& report) {
  json j;
  j["command"] = report.command;
  j["config"] = config_to_value(report.config);
  if (report.axioms) j["axioms"] = axioms_to_value(*report.axioms);
  if (report.recovery) j["recovery"] = recovery_to_value(*report.recovery);
  auto probes = json::array();
  for (const auto& r : report.probes)
    probes.push_back({{"norm_x", r.norm_x}, {"bound", r.bound}, {"error", r.error}, {"ratio", r.ratio}});
  j["probes"] = probes;
  auto checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back(
        {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  }
  j["checks"] = checks;
  j["passed"] = report.passed();
  if (report.timings) {
    j["timings"] = {{"axioms_seconds", report.timings->axioms_seconds},
                    {"recovery_seconds", report.timings->recovery_seconds}};
  }
  return detail::render_json(j);
}

StabilityReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    StabilityReport report;
    report.command = j.at("command").get<std::string>();
    report.config = config_from_value(j.at("config"));
    if (j.contains("axioms")) report.axioms = axioms_from_value(j.at("axioms"));
    if (j.contains("recovery")) report.recovery = recovery_from_value(j.at("recovery"));
    for (const auto& r : j.at("probes")) {
      report.probes.push_back({number_from_json(r.at("norm_x")), number_from_json(r.at("bound")),
                               number_from_json(r.at("error")), number_from_json(r.at("ratio"))});
    }
    for (const auto& c : j.at("checks")) {
      report.checks.push_back({c.at("name").get<std::string>(), number_from_json(c.at("value")),
                               number_from_json(c.at("tolerance")), c.at("passed").get<bool>()});
    }
    if (j.contains("timings")) {
      const auto& t = j.at("timings");
      report.timings = Timings{number_from_json(t.at("axioms_seconds")),
                               number_from_json(t.at("recovery_seconds"))};
    }
    return report;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report: malformed JSON: ") + e.what());
  }
}

std::string report_to_csv(const StabilityReport& report) {
  std::string out = "norm_x,bound,error,ratio\n";
  for (const auto& r : report.probes) {
    out += csv_number(r.norm_x) + "," + csv_number(r.bound) + "," + csv_number(r.error) + "," +
           csv_number(r.ratio) + "\n";
  }
  return out;
}

std::string render(const StabilityReport& report, Format format) {
  return format == Format::kJson ? report_to_json(report) : report_to_csv(report);
}

// -- files --------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw std::runtime_error("failed reading " + path.string());
  return buffer.str();
}

void emit_report(const StabilityReport& report, Format format, const std::filesystem::path& path) {
  write_file(path, render(report, format));
}

}  // namespace tristab::lab
