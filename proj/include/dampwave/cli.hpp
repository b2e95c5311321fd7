#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dampwave::cli {

inline constexpr const char* kVersion = "0.4.0";
inline constexpr const char* kOutputDirEnv = "DAMPWAVE_OUTPUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitBlowup = 3 };

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"run-linear", "run-nonlinear",  "picard", "verify-estimates",
                                             "fujita-sweep", "profile"};
  return list;
}

struct ExperimentConfig {
  std::string command;
  int dim = 1;
  /// 0 selects the default grid for the dimension.
  double box_length = 0.0;
  int points = 0;

  double p = 4.0;
  /// 0 selects the default step for the dimension.
  double dt = 0.0;
  double t_end = 100.0;
  /// 0 selects about 200 snapshots.
  int output_every = 0;
  double dealias_factor = 2.0;
  /// 0 selects 1e6 * max(||u0||_inf, ||u1||_inf).
  double blowup_threshold = 0.0;

  /// u0 = amplitude * exp(-|x|^2 / width^2), u1 likewise with u1_amplitude.
  double amplitude = 0.01;
  double u1_amplitude = 0.01;
  double width = 1.0;
  std::uint64_t seed = 1;

  std::vector<double> q_list{1.0, 2.0, kInf()};
  std::vector<double> p_list{2.0, 4.0};
  int iterations = 6;
  /// Times for the A_1 .. A_5 decomposition; empty selects 10, 20, ..., t_end.
  std::vector<double> a_times;
  /// Which catalog parts verify-estimates runs: any of p, i, h, o.
  std::string catalog = "piho";
  double epsilon = 0.5;
  unsigned workers = 0;
  std::string output_dir = "dampwave-out";

  static constexpr double kInf() { return std::numeric_limits<double>::infinity(); }
};

/// Every key accepted by the config file and the command-line flags.
const std::vector<std::string>& config_keys();

/// Sets one key from its text value. Throws ConfigError on unknown keys and
/// unparsable values.
void set_field(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" lines; blank lines and lines starting with '#' are
/// ignored. Repeated keys are an error.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key, one per line, in config_keys() order.
std::string to_config_text(const ExperimentConfig& cfg);

/// Checks every module precondition that can be checked before running.
void validate(const ExperimentConfig& cfg);

/// Number formatting used by every table: 17 significant digits, "inf",
/// "-inf" and "nan" for non-finite values.
std::string format_number(double x);

struct FileRecord {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_text;
  std::string version = kVersion;
  double wall_time = 0.0;
  /// "completed" or "blowup".
  std::string outcome;
  int exit_code = kExitOk;
  std::vector<FileRecord> files;
};

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Output directory after the environment override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

/// Validates, runs the command and writes the tables, reports.jsonl and
/// manifest.jsonl into the resolved output directory. Files written before
/// an exception are removed again before it propagates.
RunManifest execute(const ExperimentConfig& cfg);

std::string manifest_to_jsonl(const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

struct ColumnDiff {
  std::string column;
  double max_rel_diff = 0.0;
};

struct FileDiff {
  std::string name;
  /// "differs", "only_a", "only_b" or "schema_mismatch".
  std::string status;
  std::vector<ColumnDiff> columns;
  std::string note;
};

struct CompareReport {
  std::vector<FileDiff> files;
  bool identical() const { return files.empty(); }
};

/// Compares two manifests (paths to manifest.jsonl or to the directory that
/// holds it). Files with equal digests are omitted; CSV tables get a
/// per-column max relative difference, with schema mismatches reported in
/// the entry rather than raised.
CompareReport compare(const std::filesystem::path& manifest_a, const std::filesystem::path& manifest_b);
std::string compare_to_jsonl(const CompareReport& report);

/// Max relative difference per column of two CSV texts with the same header.
/// Cells that are not numbers count as 0 when equal and 1 otherwise.
FileDiff compare_tables(const std::string& name, const std::string& csv_a, const std::string& csv_b);

}  // namespace dampwave::cli
