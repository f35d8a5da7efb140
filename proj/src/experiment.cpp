#include "rpchol/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "rpchol/errors.hpp"
#include "rpchol/pivoting.hpp"

namespace rpchol::bench {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& message) {
  throw ConfigError("config." + field + ": " + message);
}

std::size_t get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) field_error(field, "expected a non-negative integer");
  return j.get<std::size_t>();
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  return j.get<double>();
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) field_error(field, "expected a string");
  return j.get<std::string>();
}

Interval get_interval(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) field_error(field, "expected [lo, hi]");
  return {get_number(j[0], field + "[0]"), get_number(j[1], field + "[1]")};
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "diagonal") return ExperimentKind::Diagonal;
  if (s == "random_spectrum") return ExperimentKind::RandomSpectrum;
  if (s == "spiral_kernel") return ExperimentKind::SpiralKernel;
  if (s == "custom_matrix_file") return ExperimentKind::CustomMatrixFile;
  field_error("experiment", "unknown experiment '" + s + "'");
}

ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  field_error("output.format", "expected csv or markdown, got '" + s + "'");
}

std::vector<double> spectrum_values(const ExperimentConfig& c) {
  if (!c.spectrum_values.empty()) return c.spectrum_values;
  const SpectrumFn f = named_spectrum(c.spectrum);
  std::vector<double> v(c.n);
  for (std::size_t i = 0; i < c.n; ++i) v[i] = f(i + 1);
  return v;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Runs body(t) for t in [0, count) on up to hardware_concurrency threads and
// rethrows the first exception.
template <class Body> void parallel_for(std::size_t count, Body body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto work = [&] {
    for (std::size_t t = next++; t < count; t = next++) {
      try {
        body(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

} // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::Diagonal: return "diagonal";
  case ExperimentKind::RandomSpectrum: return "random_spectrum";
  case ExperimentKind::SpiralKernel: return "spiral_kernel";
  case ExperimentKind::CustomMatrixFile: return "custom_matrix_file";
  }
  return "?";
}

std::string to_string(ReportFormat format) { return format == ReportFormat::Csv ? "csv" : "markdown"; }

ExperimentConfig parse_config(const json& j, const ExperimentConfig& base) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c = base;
  bool n_given = false;
  bool counts_given = false;

  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      c.experiment = parse_kind(get_string(value, key));
    } else if (key == "n") {
      c.n = get_count(value, key);
      n_given = true;
    } else if (key == "k") {
      c.k = get_count(value, key);
    } else if (key == "spectrum") {
      if (value.is_string()) {
        c.spectrum = value.get<std::string>();
        c.spectrum_values.clear();
      } else if (value.is_array()) {
        c.spectrum_values.clear();
        for (std::size_t i = 0; i < value.size(); ++i)
          c.spectrum_values.push_back(get_number(value[i], "spectrum[" + std::to_string(i) + "]"));
      } else {
        field_error(key, "expected a spectrum name or an array of values");
      }
    } else if (key == "rules") {
      if (!value.is_array()) field_error(key, "expected an array of rule spellings");
      c.rules.clear();
      for (std::size_t i = 0; i < value.size(); ++i) c.rules.push_back(get_string(value[i], "rules[" + std::to_string(i) + "]"));
    } else if (key == "trials") {
      c.trials = get_count(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
        field_error(key, "expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "norms") {
      if (!value.is_array() || value.empty()) field_error(key, "expected a non-empty array of norm names");
      c.norms = NormSelection{false, false, false};
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string name = get_string(value[i], "norms[" + std::to_string(i) + "]");
        try {
          switch (parse_norm(name)) {
          case Norm::Trace: c.norms.trace = true; break;
          case Norm::Frobenius: c.norms.frobenius = true; break;
          case Norm::Operator: c.norms.op = true; break;
          }
        } catch (const InvalidParameter& e) {
          field_error("norms[" + std::to_string(i) + "]", e.what());
        }
      }
      // Ratios are always reported in the trace norm.
      c.norms.trace = true;
    } else if (key == "engine") {
      try {
        c.engine = parse_engine(get_string(value, key));
      } catch (const InvalidParameter& e) {
        field_error(key, e.what());
      }
    } else if (key == "operator_every_step") {
      if (!value.is_boolean()) field_error(key, "expected true or false");
      c.operator_every_step = value.get<bool>();
    } else if (key == "output") {
      if (!value.is_object()) field_error(key, "expected {\"path\": ..., \"format\": ...}");
      OutputSpec out;
      for (const auto& [okey, ovalue] : value.items()) {
        if (okey == "path") out.path = get_string(ovalue, "output.path");
        else if (okey == "format") out.format = parse_format(get_string(ovalue, "output.format"));
        else field_error("output." + okey, "unknown field");
      }
      if (out.path.empty()) field_error("output.path", "missing");
      c.output = out;
    } else if (key == "matrix_file") {
      c.matrix_file = get_string(value, key);
    } else if (key == "bandwidth") {
      c.bandwidth = get_number(value, key);
    } else if (key == "spiral") {
      if (!value.is_object()) field_error(key, "expected an object");
      for (const auto& [skey, svalue] : value.items()) {
        const std::string field = "spiral." + skey;
        if (skey == "first_count") {
          c.spiral.first_count = get_count(svalue, field);
          counts_given = true;
        } else if (skey == "second_count") {
          c.spiral.second_count = get_count(svalue, field);
          counts_given = true;
        } else if (skey == "first_range") {
          c.spiral.first_range = get_interval(svalue, field);
        } else if (skey == "second_range") {
          c.spiral.second_range = get_interval(svalue, field);
        } else if (skey == "scale") {
          c.spiral.scale = get_number(svalue, field);
        } else if (skey == "sort") {
          if (!svalue.is_boolean()) field_error(field, "expected true or false");
          c.spiral.sort_by_parameter = svalue.get<bool>();
        } else {
          field_error(field, "unknown field");
        }
      }
    } else {
      field_error(key, "unknown field");
    }
  }

  if (c.experiment == ExperimentKind::SpiralKernel) {
    if (counts_given) {
      const std::size_t total = c.spiral.first_count + c.spiral.second_count;
      if (n_given && c.n != total) field_error("n", "must equal spiral.first_count + spiral.second_count");
      c.n = total;
    } else if (n_given) {
      c.spiral.first_count = c.n / 2;
      c.spiral.second_count = c.n - c.n / 2;
    } else {
      c.n = c.spiral.first_count + c.spiral.second_count;
    }
    c.spiral.n_total = c.n;
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, base);
}

void validate(const ExperimentConfig& c) {
  if (c.trials < 1) field_error("trials", "must be >= 1");
  if (c.rules.empty()) field_error("rules", "must list at least one rule");
  for (std::size_t i = 0; i < c.rules.size(); ++i) {
    PivotRule rule;
    try {
      rule = parse_rule(c.rules[i]);
    } catch (const InvalidParameter& e) {
      field_error("rules[" + std::to_string(i) + "]", e.what());
    }
    if (c.engine == Engine::Factored && needs_row_norms(rule))
      field_error("rules[" + std::to_string(i) + "]", "needs the dense engine");
  }
  if (c.engine == Engine::Factored && (c.norms.frobenius || c.norms.op))
    field_error("norms", "the factored engine reports the trace norm only");
  if (!(c.bandwidth > 0.0)) field_error("bandwidth", "must be positive");

  switch (c.experiment) {
  case ExperimentKind::CustomMatrixFile:
    if (c.matrix_file.empty()) field_error("matrix_file", "required for custom_matrix_file");
    return; // n and k are checked once the file is loaded
  case ExperimentKind::Diagonal:
  case ExperimentKind::RandomSpectrum:
    if (c.n < 1) field_error("n", "must be >= 1");
    if (!c.spectrum_values.empty()) {
      if (c.spectrum_values.size() != c.n) field_error("spectrum", "explicit values must have length n");
      for (double v : c.spectrum_values)
        if (!std::isfinite(v) || v < 0.0) field_error("spectrum", "values must be finite and >= 0");
    } else {
      try {
        (void)named_spectrum(c.spectrum);
      } catch (const InvalidParameter& e) {
        field_error("spectrum", e.what());
      }
    }
    break;
  case ExperimentKind::SpiralKernel:
    if (c.n < 1) field_error("n", "must be >= 1");
    if (c.spiral.n_total != c.n || c.spiral.first_count + c.spiral.second_count != c.n)
      field_error("spiral", "cluster counts must sum to n");
    for (const Interval& r : {c.spiral.first_range, c.spiral.second_range})
      if (!(r.lo < r.hi) || r.lo < 0.0 || r.hi > 64.0) field_error("spiral", "ranges must be non-empty and within [0, 64]");
    if (!(c.spiral.scale > 0.0)) field_error("spiral.scale", "must be positive");
    break;
  }
  if (c.k > c.n) field_error("k", "must be <= n (" + std::to_string(c.k) + " > " + std::to_string(c.n) + ")");
}

ExperimentConfig default_spiral_config() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::SpiralKernel;
  c.n = 500;
  c.k = 50;
  c.rules = {"uniform", "gibbs:1", "gibbs:2", "greedy:last", "gibbs:20", "alt:greedy:last+uniform"};
  c.trials = 5;
  c.seed = 0;
  c.norms = NormSelection::all();
  c.bandwidth = 1000.0;
  c.spiral = SpiralConfig{};
  return c;
}

SpdMatrix build_matrix(const ExperimentConfig& c, std::size_t trial) {
  Rng rng(c.seed + trial);
  switch (c.experiment) {
  case ExperimentKind::Diagonal: return SpdMatrix::diagonal(spectrum_values(c));
  case ExperimentKind::RandomSpectrum: return random_spd_spectrum(spectrum_values(c), rng);
  case ExperimentKind::SpiralKernel: return gaussian_kernel(spiral_points(c.spiral, rng), c.bandwidth);
  case ExperimentKind::CustomMatrixFile: return load_spd_matrix_file(c.matrix_file);
  }
  throw ConfigError("config.experiment: unsupported experiment");
}

const NormStat& RuleAggregate::stat(Norm norm) const {
  for (const NormStat& s : stats)
    if (s.norm == norm) return s;
  throw InvalidParameter("norm " + to_string(norm) + " was not recorded for rule " + rule);
}

const RuleAggregate& ExperimentReport::aggregate(const std::string& rule) const {
  const std::string canonical = to_string(parse_rule(rule));
  for (const RuleAggregate& a : aggregates)
    if (a.rule == canonical) return a;
  throw InvalidParameter("rule " + rule + " is not part of this report");
}

ExperimentReport run_experiment(const ExperimentConfig& input) {
  validate(input);
  ExperimentReport report;
  report.config = input;
  ExperimentConfig& c = report.config;

  std::optional<SpdMatrix> shared;
  if (c.experiment == ExperimentKind::CustomMatrixFile || c.experiment == ExperimentKind::Diagonal) {
    shared = build_matrix(c, 0);
    c.n = shared->size();
    if (c.k > c.n) field_error("k", "must be <= n (" + std::to_string(c.k) + " > " + std::to_string(c.n) + ")");
  }

  std::vector<PivotRule> rules;
  for (const std::string& s : c.rules) {
    rules.push_back(parse_rule(s));
    report.rules.push_back(to_string(rules.back()));
  }

  RunOptions options;
  options.norms = c.norms;
  options.operator_every_step = c.operator_every_step;

  report.runs.resize(rules.size() * c.trials);
  parallel_for(c.trials, [&](std::size_t t) {
    const SpdMatrix a = shared ? *shared : build_matrix(c, t);
    for (std::size_t r = 0; r < rules.size(); ++r) {
      Rng rng(derive_seed(c.seed + t, r));
      report.runs[r * c.trials + t] = run(a, rules[r], c.k, rng, c.engine, options);
    }
  });

  for (std::size_t r = 0; r < rules.size(); ++r) {
    RuleAggregate agg;
    agg.rule = report.rules[r];
    for (Norm norm : c.norms.list()) {
      std::vector<double> values;
      for (std::size_t t = 0; t < c.trials; ++t) {
        const double v = *report.runs[r * c.trials + t].ratios.get(norm);
        if (!(v >= 0.0 && v <= 1.0 + 1e-9)) {
          std::ostringstream msg;
          msg << "ratio " << v << " for " << agg.rule << " (" << to_string(norm) << ", trial " << t << ") outside [0, 1]";
          throw InvariantViolation(msg.str());
        }
        values.push_back(v);
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      agg.stats.push_back({norm, mean, sample_std(values, mean)});
    }
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

ExperimentReport spiral_experiment(const ExperimentConfig& config) {
  if (config.experiment != ExperimentKind::SpiralKernel)
    throw ConfigError("config.experiment: spiral_experiment needs spiral_kernel");
  return run_experiment(config);
}

void write_csv(const ExperimentReport& report, std::ostream& out) {
  const ExperimentConfig& c = report.config;
  out << "rule,norm,mean_ratio,std_ratio,trials,n,k,seed\n";
  out << std::setprecision(17);
  for (const RuleAggregate& agg : report.aggregates)
    for (const NormStat& s : agg.stats)
      out << agg.rule << ',' << to_string(s.norm) << ',' << s.mean << ',' << s.std << ',' << c.trials << ',' << c.n
          << ',' << c.k << ',' << c.seed << '\n';
}

void write_markdown(const ExperimentReport& report, std::ostream& out) {
  const ExperimentConfig& c = report.config;
  const std::vector<Norm> norms = c.norms.list();
  out << "Ratio |M^(" << c.k << ")| / |M^(0)|, " << to_string(c.experiment) << ", n = " << c.n << ", "
      << c.trials << (c.trials == 1 ? " trial" : " trials") << ", seed " << c.seed << "\n\n";
  out << "| rule |";
  for (Norm n : norms) out << ' ' << to_string(n) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < norms.size(); ++i) out << "---|";
  out << '\n' << std::fixed << std::setprecision(3);
  for (const RuleAggregate& agg : report.aggregates) {
    out << "| " << agg.rule << " |";
    for (Norm n : norms) {
      const NormStat& s = agg.stat(n);
      out << ' ' << s.mean;
      if (c.trials > 1) out << " ± " << s.std;
      out << " |";
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  if (report.aggregates.empty()) throw InvalidParameter("emit_report: empty report");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path.string());
  if (format == ReportFormat::Csv) write_csv(report, out);
  else write_markdown(report, out);
  if (!out) throw IoError("failed writing report to " + path.string());
}

json runs_to_json(const ExperimentReport& report) {
  json runs = json::array();
  for (std::size_t r = 0; r < report.rules.size(); ++r) {
    for (std::size_t t = 0; t < report.config.trials; ++t) {
      json j = to_json(report.run(r, t));
      j["trial"] = t;
      runs.push_back(std::move(j));
    }
  }
  return runs;
}

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "rule,norm,mean_ratio,std_ratio,trials,n,k,seed")
    throw InvalidInput("report CSV: unexpected header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw InvalidInput("report CSV: expected 8 columns in '" + line + "'");
    rows.push_back({cells[0], cells[1], std::stod(cells[2]), std::stod(cells[3]), std::stoul(cells[4]),
                    std::stoul(cells[5]), std::stoul(cells[6]), std::stoull(cells[7])});
  }
  return rows;
}

} // namespace rpchol::bench
