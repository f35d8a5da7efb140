#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpchol/cholesky.hpp"
#include "rpchol/generators.hpp"

namespace rpchol::bench {

enum class ExperimentKind { Diagonal, RandomSpectrum, SpiralKernel, CustomMatrixFile };
enum class ReportFormat { Csv, Markdown };

std::string to_string(ExperimentKind kind);
std::string to_string(ReportFormat format);

struct OutputSpec {
  std::filesystem::path path;
  ReportFormat format = ReportFormat::Csv;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::RandomSpectrum;
  std::size_t n = 100;
  std::size_t k = 50;
  // Named spectrum (see named_spectrum) or explicit values; used by the
  // diagonal and random_spectrum experiments.
  std::string spectrum = "i";
  std::vector<double> spectrum_values;
  std::vector<std::string> rules;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  NormSelection norms = NormSelection::all();
  Engine engine = Engine::Dense;
  bool operator_every_step = false;
  std::optional<OutputSpec> output;
  std::filesystem::path matrix_file;
  double bandwidth = 1000.0;
  SpiralConfig spiral;
};

// Reads a JSON config on top of base. Unknown fields and invalid values raise
// ConfigError with the offending field named.
ExperimentConfig parse_config(const nlohmann::json& json, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {});
void validate(const ExperimentConfig& config);

// Six-rule spiral-kernel comparison at n = 500, k = 50, bandwidth 1000.
ExperimentConfig default_spiral_config();

// Matrix for one trial; trial t uses seed config.seed + t.
SpdMatrix build_matrix(const ExperimentConfig& config, std::size_t trial);

struct NormStat {
  Norm norm = Norm::Trace;
  double mean = 0.0;
  double std = 0.0; // sample standard deviation, 0 for a single trial
};

struct RuleAggregate {
  std::string rule;
  std::vector<NormStat> stats;

  const NormStat& stat(Norm norm) const;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> rules; // canonical spellings
  // Rule-major: runs[r * trials + t].
  std::vector<RunReport> runs;
  std::vector<RuleAggregate> aggregates; // one per rule

  const RunReport& run(std::size_t rule, std::size_t trial) const { return runs.at(rule * config.trials + trial); }
  const RuleAggregate& aggregate(const std::string& rule) const;
};

// Every rule runs on the same per-trial matrix with its own rng stream.
// Trials run in parallel; output does not depend on scheduling.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport spiral_experiment(const ExperimentConfig& config = default_spiral_config());

void write_csv(const ExperimentReport& report, std::ostream& out);
void write_markdown(const ExperimentReport& report, std::ostream& out);
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);
nlohmann::json runs_to_json(const ExperimentReport& report);

struct CsvRow {
  std::string rule;
  std::string norm;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  std::size_t trials = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

std::vector<CsvRow> parse_csv(std::istream& in);

} // namespace rpchol::bench
