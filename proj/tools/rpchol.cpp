// rpchol: partial Cholesky experiments and verification sweeps.
//
//   rpchol verify [--sweep N] [--seed S] [--inject-non-psd] [--repro-dir DIR]
//   rpchol run --config FILE [--out FILE] [--format csv|markdown] [--runs-json FILE]
//   rpchol spiral [--config FILE] [--out FILE] [--format csv|markdown] [--runs-json FILE]
//   rpchol points --out FILE [--seed S]
//
// Exit codes: 0 success, 1 invariant failure, 2 configuration error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rpchol/errors.hpp"
#include "rpchol/experiment.hpp"
#include "rpchol/generators.hpp"
#include "rpchol/verify.hpp"

namespace {

constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

struct ReportFlags {
  std::string config;
  std::string out;
  std::string format;
  std::string runs_json;
};

void add_report_flags(CLI::App* cmd, ReportFlags& flags) {
  cmd->add_option("--out", flags.out, "Write the aggregate report to FILE");
  cmd->add_option("--format", flags.format, "Report format for --out")->check(CLI::IsMember({"csv", "markdown"}));
  cmd->add_option("--runs-json", flags.runs_json, "Write every per-run trajectory as JSON to FILE");
}

void finish_experiment(const rpchol::bench::ExperimentReport& report, const ReportFlags& flags) {
  using namespace rpchol::bench;
  write_markdown(report, std::cout);

  std::optional<OutputSpec> output = report.config.output;
  if (!flags.out.empty()) {
    OutputSpec spec;
    spec.path = flags.out;
    spec.format = output ? output->format : ReportFormat::Csv;
    output = spec;
  }
  if (output && !flags.format.empty()) output->format = flags.format == "csv" ? ReportFormat::Csv : ReportFormat::Markdown;
  if (output) {
    emit_report(report, output->format, output->path);
    std::cerr << "wrote " << to_string(output->format) << " report to " << output->path.string() << '\n';
  }
  if (!flags.runs_json.empty()) {
    std::ofstream out(flags.runs_json);
    if (!out) throw rpchol::IoError("cannot write " + flags.runs_json);
    out << runs_to_json(report).dump(1) << '\n';
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomly pivoted partial Cholesky: experiments and verification"};
  app.require_subcommand(1);

  rpchol::bench::VerifyOptions verify_options;
  std::string repro_dir = ".";
  auto* verify = app.add_subcommand("verify", "Run the identity and inequality sweeps");
  verify->add_option("--sweep", verify_options.sweep_size, "Matrices per check")->capture_default_str();
  verify->add_option("--seed", verify_options.seed, "Master seed")->capture_default_str();
  verify->add_flag("--inject-non-psd", verify_options.inject_non_psd, "Add a non-psd matrix to the Lemma-2 sweep");
  verify->add_option("--repro-dir", repro_dir, "Directory for reproduction matrices of failed checks");

  ReportFlags run_flags;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", run_flags.config, "Experiment config (JSON)")->required();
  add_report_flags(run, run_flags);

  ReportFlags spiral_flags;
  auto* spiral = app.add_subcommand("spiral", "Spiral-kernel comparison of six pivot rules");
  spiral->add_option("--config", spiral_flags.config, "Overrides on top of the default spiral config (JSON)");
  add_report_flags(spiral, spiral_flags);

  std::string points_out;
  std::uint64_t points_seed = 0;
  auto* points = app.add_subcommand("points", "Write the default spiral point set as CSV");
  points->add_option("--out", points_out, "Output CSV file")->required();
  points->add_option("--seed", points_seed, "Sampling seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      verify_options.repro_dir = repro_dir;
      const auto summary = rpchol::bench::run_verify(verify_options);
      rpchol::bench::print_summary(summary, std::cout);
      return summary.passed() ? 0 : kExitInvariant;
    }
    if (*run) {
      const auto config = rpchol::bench::load_config(run_flags.config);
      finish_experiment(rpchol::bench::run_experiment(config), run_flags);
      return 0;
    }
    if (*spiral) {
      auto config = rpchol::bench::default_spiral_config();
      if (!spiral_flags.config.empty()) config = rpchol::bench::load_config(spiral_flags.config, config);
      finish_experiment(rpchol::bench::spiral_experiment(config), spiral_flags);
      return 0;
    }
    if (*points) {
      rpchol::Rng rng(points_seed);
      const rpchol::PointSet pts = rpchol::spiral_points(rpchol::SpiralConfig{}, rng);
      std::ofstream out(points_out);
      if (!out) throw rpchol::IoError("cannot write " + points_out);
      rpchol::write_points_csv(pts, out);
      return 0;
    }
  } catch (const rpchol::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const rpchol::EquivalenceFailure& e) {
    std::cerr << "equivalence failure: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const rpchol::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
