// The acceptance suite: ten oracle- and property-based checks run by the test
// binary and by the CLI `verify` subcommand. Each criterion reports one
// deterministic pass/fail line; measured runtimes feed the two timed checks
// but are never part of the reported text.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace morpho::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string details;   // deterministic given the build
  double seconds = 0.0;  // wall clock, informational only
};

// Runs criterion `id` (1..10); scratch files go under work_dir.
CriterionResult run_criterion(int id, const std::filesystem::path& work_dir);

// All ten criteria in order.
std::vector<CriterionResult> run_all_criteria(const std::filesystem::path& work_dir);

// One line per criterion on the given stream; returns true if all passed.
bool print_report(const std::vector<CriterionResult>& results, std::ostream& out);

}  // namespace morpho::verify
