// triple-stab: run axiom suites, recovery pipelines and bound tables from a
// JSON config, and persist deterministic JSON/CSV reports.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "tristab/lab.hpp"
#include "tristab/stability.hpp"

namespace {

namespace lab = tristab::lab;

enum Exit : int { kOk = 0, kChecksFailed = 1, kInvalidInput = 2, kIoError = 3 };

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim;
  std::optional<std::string> scheme;
  std::optional<double> eps;
  std::optional<double> p;
  std::optional<std::size_t> probe_count;
  std::optional<double> tol;
  std::optional<int> l_max;
  std::optional<std::string> out;
  std::optional<std::string> input;
  std::string format;
  bool timings = false;
};

void add_common(CLI::App& sub, Overrides& o, bool with_input) {
  sub.add_option("--config", o.config, "JSON config file");
  sub.add_option("--seed", o.seed, "master seed");
  sub.add_option("--dim", o.dim, "matrix dimension n");
  sub.add_option("--scheme", o.scheme,
                 "cauchy2 | cauchy2-contractive | jensen3 | jensen3-contractive");
  sub.add_option("--eps", o.eps, "control-function scale");
  sub.add_option("--p", o.p, "control-function exponent");
  sub.add_option("--probe_count", o.probe_count, "number of probes / samples");
  sub.add_option("--tol", o.tol, "direct-method tolerance");
  sub.add_option("--l_max", o.l_max, "direct-method level cap");
  sub.add_option("--out", o.out, "write the report here instead of stdout");
  sub.add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  sub.add_flag("--timings", o.timings, "record wall-clock timings (breaks byte-identity)");
  if (with_input) sub.add_option("--input", o.input, "persisted JSON report")->required();
}

lab::ExperimentConfig build_config(const Overrides& o) {
  lab::ExperimentConfig c = o.config ? lab::load_config(*o.config) : lab::ExperimentConfig{};
  if (o.seed) c.seed = *o.seed;
  if (o.dim) c.dim = *o.dim;
  if (o.scheme) c.scheme = tristab::stability::parse_scheme(*o.scheme);
  if (o.eps) c.eps = *o.eps;
  if (o.p) c.p = *o.p;
  if (o.probe_count) c.probe_count = *o.probe_count;
  if (o.tol) c.tol = *o.tol;
  if (o.l_max) c.l_max = *o.l_max;
  if (o.timings) c.record_timings = true;
  lab::validate(c);
  return c;
}

void deliver(const std::string& text, const Overrides& o) {
  if (o.out) {
    lab::write_file(*o.out, text);
  } else {
    std::cout << text << std::flush;
  }
}

int finish(const lab::StabilityReport& report, const Overrides& o, lab::Format fallback) {
  const lab::Format format = o.format.empty() ? fallback : lab::parse_format(o.format);
  deliver(lab::render(report, format), o);
  const auto failed = report.failed_checks();
  for (const auto& line : failed) std::cerr << "FAILED " << line << "\n";
  if (report.recovery && !report.recovery->failure.empty())
    std::cerr << "recovery: " << report.recovery->failure << "\n";
  return failed.empty() ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for triple derivations on complex matrices"};
  app.require_subcommand(1);
  Overrides o;
  auto* axioms = app.add_subcommand("axioms", "check the triple-product axioms on seeded samples");
  auto* recover = app.add_subcommand("recover", "perturb, recover and verify a (D, theta) pair");
  auto* bounds = app.add_subcommand("bounds", "closed-form vs series bound constants over a p grid");
  auto* report = app.add_subcommand("report", "re-render a persisted JSON report");
  add_common(*axioms, o, false);
  add_common(*recover, o, false);
  add_common(*bounds, o, false);
  add_common(*report, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (report->parsed()) {
      const auto persisted = lab::report_from_json(lab::read_file(*o.input));
      return finish(persisted, o, lab::Format::kCsv);
    }
    const lab::ExperimentConfig config = build_config(o);
    const lab::RunOptions run{lab::resolve_threads()};
    if (axioms->parsed()) return finish(lab::run_axiom_suite(config, run), o, lab::Format::kJson);
    if (recover->parsed()) return finish(lab::run_recovery(config, run), o, lab::Format::kJson);

    const auto rows = lab::bounds_table(config.eps, config.dim);
    const bool csv = o.format == "csv";
    deliver(csv ? lab::bounds_to_csv(rows) : lab::bounds_to_json(rows), o);
    int code = kOk;
    for (const auto& row : rows) {
      if (row.relative_error <= 1e-12) continue;
      std::cerr << "FAILED bounds." << tristab::stability::to_string(row.scheme) << " p=" << row.p
                << ": relative error " << row.relative_error << " exceeds 1e-12\n";
      code = kChecksFailed;
    }
    return code;
  } catch (const tristab::stability::GateViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
}
