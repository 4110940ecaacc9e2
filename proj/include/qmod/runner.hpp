#pragma once

#include "qmod/core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qmod {

inline constexpr const char* kReportSchema = "qmod-report/1";

struct RunOptions {
  std::optional<std::uint64_t> seed;     // overrides the config's seed
  unsigned threads = 1;
  std::filesystem::path out_dir = ".";
  std::filesystem::path config_dir = ".";  // base for relative paths in the config
};

struct RunResult {
  std::string command;
  std::string stem;  // output file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json summary;  // without runtime; see write_report
  bool all_pass = true;
};

/// Numbers in reports: 12 significant digits, "inf"/"-inf"/"nan" spelled out.
std::string format_number(double v);

/// Runs one experiment. Throws ValidationError for schema problems (unknown
/// command, bad keys, missing files) and the numeric exceptions otherwise.
RunResult run_experiment(const nlohmann::json& config, const RunOptions& options);

/// Header row plus data rows, comma separated, newline terminated.
std::string csv_body(const RunResult& result);

/// Writes <stem>.csv and <stem>.json (summary plus runtime) into out_dir.
void write_report(const RunResult& result, const std::filesystem::path& out_dir, double runtime_seconds);

/// Full pipeline for `qmod run`: 0 when every pass flag holds, 1 on a failed
/// flag or numeric failure, 2 on usage or validation errors (nothing written).
int run_config_file(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out,
                    std::ostream& err);

/// `qmod audit-group`: prints the audit summary as JSON.
int audit_group_file(const std::filesystem::path& group_path, std::ostream& out, std::ostream& err);

}  // namespace qmod
