#ifndef TRISTAB_LAB_HPP
#define TRISTAB_LAB_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tristab/linalg.hpp"
#include "tristab/stability.hpp"

namespace tristab::lab {

using linalg::ComplexMatrix;
using stability::ProbeRow;
using stability::Scheme;

// Tolerances pinned for the report checks.
inline constexpr double kCommutativityTol = 1e-13;
inline constexpr double kJordanIdentityTol = 1e-10;
inline constexpr double kPositivityTol = 1e-10;
inline constexpr double kNormIdentityTol = 1e-8;
inline constexpr double kProductAgreementTol = 1e-12;
inline constexpr double kBoundSlack = 1e-9;
inline constexpr double kRecoveryTol = 1e-6;
inline constexpr double kRateTol = 0.05;
inline constexpr double kHomogeneityTol = 1e-6;
inline constexpr double kDerivationTol = 1e-6;
inline constexpr std::size_t kRateWindow = 10;
inline constexpr std::size_t kUnimodularCount = 16;
inline constexpr std::size_t kPositivityProbes = 16;
inline constexpr int kDecreasingFrom = 5;

/// How the exact pair (D, theta) is built: theta(x) = u x u*, D = theta o [a, .].
struct GeneratorSpec {
  enum class Kind { kSeeded, kIdentity, kExplicit };
  Kind kind = Kind::kSeeded;
  /// explicit generator data; a missing matrix falls back to the seeded one
  std::optional<ComplexMatrix> u;
  std::optional<ComplexMatrix> a;
  /// spectral norm of the seeded skew-adjoint a
  double a_norm = 1.0;

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct ExperimentConfig {
  std::size_t dim = 2;
  Scheme scheme = Scheme::kCauchy2;
  double eps = 0.1;
  double p = 0.5;
  std::uint64_t seed = 42;
  std::size_t probe_count = 100;
  double tol = 1e-9;
  int l_max = 200;
  GeneratorSpec generator;
  /// wall-clock timings make the report non-reproducible, so they are opt-in
  bool record_timings = false;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws std::invalid_argument for malformed fields and
/// stability::GateViolation when (scheme, p) fails the summability gate.
void validate(const ExperimentConfig& config);

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  friend bool operator==(const CheckEntry&, const CheckEntry&) = default;
};

struct AxiomSummary {
  std::size_t samples = 0;
  double commutativity = 0.0;      // absolute
  double jordan_identity = 0.0;    // relative
  double l_self_adjoint = 0.0;     // absolute, HS proxy
  double l_positivity = 0.0;       // absolute, HS proxy
  double norm_identity = 0.0;      // relative
  double product_agreement = 0.0;  // relative
  friend bool operator==(const AxiomSummary&, const AxiomSummary&) = default;
};

struct HomogeneitySample {
  std::complex<double> lambda;
  double residual = 0.0;
  friend bool operator==(const HomogeneitySample&, const HomogeneitySample&) = default;
};

struct RecoverySummary {
  bool recovered = false;
  std::string failure;  // empty on success

  double hypothesis_f_ratio = 0.0;
  double hypothesis_h_ratio = 0.0;
  double hypothesis_f_absolute = 0.0;
  double hypothesis_h_absolute = 0.0;
  double triple_hypothesis_ratio = 0.0;  // empirical, reported only
  std::size_t hypothesis_samples = 0;

  double recovery_error_D = 0.0;
  double recovery_error_theta = 0.0;
  double linearity_certificate_D = 0.0;
  double linearity_certificate_theta = 0.0;
  int levels_D = 0;
  int levels_theta = 0;

  double corollary_constant = 0.0;
  double bound_ratio_D = 0.0;
  double bound_ratio_theta = 0.0;

  double expected_rate = 0.0;
  std::vector<double> rate_ratios;

  double s1_homogeneity = 0.0;
  std::vector<HomogeneitySample> complex_homogeneity;

  double theta_derivation_certificate = 0.0;
  std::vector<double> derivation_limit;

  friend bool operator==(const RecoverySummary&, const RecoverySummary&) = default;
};

struct Timings {
  double axioms_seconds = 0.0;
  double recovery_seconds = 0.0;
  friend bool operator==(const Timings&, const Timings&) = default;
};

struct StabilityReport {
  std::string command;
  ExperimentConfig config;
  std::optional<AxiomSummary> axioms;
  std::optional<RecoverySummary> recovery;
  std::vector<ProbeRow> probes;
  std::vector<CheckEntry> checks;
  std::optional<Timings> timings;

  bool passed() const;
  std::vector<std::string> failed_checks() const;

  friend bool operator==(const StabilityReport&, const StabilityReport&) = default;
};

struct RunOptions {
  unsigned threads = 1;
};

/// Worker count from TRIPLE_STAB_THREADS (a positive integer); falls back to
/// the hardware concurrency when unset. Throws std::invalid_argument on a
/// malformed value.
unsigned resolve_threads();

/// Max residuals of the axiom checkers over quintuples drawn cyclically from
/// `elements`: (a, b, x, y, z) = elements[i .. i+4]. Positivity uses the next
/// kPositivityProbes elements as probes.
AxiomSummary summarize_axioms(std::span<const ComplexMatrix> elements, unsigned threads = 1);

/// Axiom checks on config.probe_count seeded samples in M_dim.
StabilityReport run_axiom_suite(const ExperimentConfig& config, const RunOptions& run = {});

/// Builds the exact pair, perturbs it, recovers it and runs every
/// verification. Failures are recorded in the report, not thrown; only
/// an invalid config throws.
StabilityReport run_recovery(const ExperimentConfig& config, const RunOptions& run = {});

struct BoundsRow {
  Scheme scheme = Scheme::kCauchy2;
  double p = 0.0;
  double eps = 1.0;
  double closed_form = 0.0;  // corollary constant
  double series = 0.0;       // hyers_bound summed term by term at ||x|| = 1
  double relative_error = 0.0;
};

/// Bound constants over a fixed p grid per scheme, closed form against series.
std::vector<BoundsRow> bounds_table(double eps, std::size_t dim = 2);

enum class Format { kJson, kCsv };
Format parse_format(std::string_view text);

std::string report_to_json(const StabilityReport& report);
StabilityReport report_from_json(std::string_view text);
/// Per-probe table, header "norm_x,bound,error,ratio".
std::string report_to_csv(const StabilityReport& report);
std::string render(const StabilityReport& report, Format format);

std::string bounds_to_csv(std::span<const BoundsRow> rows);
std::string bounds_to_json(std::span<const BoundsRow> rows);

/// Writes `text` to `path`; throws std::runtime_error naming the path on
/// I/O failure.
void write_file(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

void emit_report(const StabilityReport& report, Format format, const std::filesystem::path& path);

}  // namespace tristab::lab

#endif  // TRISTAB_LAB_HPP
