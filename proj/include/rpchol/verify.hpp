#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rpchol::bench {

struct VerifyOptions {
  std::size_t sweep_size = 200;
  std::uint64_t seed = 0;
  // Adds a symmetric matrix with eigenvalues (3, -1) to the Lemma-2 sweep.
  bool inject_non_psd = false;
  std::filesystem::path repro_dir = ".";
};

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  // min over cases of (allowed - observed) / scale; negative when a case fails.
  double worst_slack = 0.0;
  std::string first_failure;
  std::optional<std::filesystem::path> repro_file;

  bool passed() const { return failures == 0; }
};

struct VerifySummary {
  std::vector<CheckResult> checks;

  bool ran_any() const;
  bool passed() const;
};

VerifySummary run_verify(const VerifyOptions& options);
void print_summary(const VerifySummary& summary, std::ostream& out);

} // namespace rpchol::bench
