#pragma once

// Experiment harness: validated JSON configuration, deterministic replica
// execution, CSV / NDJSON / metadata output, and the study commands.
//
// Seeds (derivation version 1): parameter point p of a command uses
//   point_seed(seed, p) = derive_stream_key(seed, 2^32 + p),
// and replica i at that point runs on the walk stream (point_seed, i).
// Aggregation always happens in replica order, so results do not depend on
// the number of worker threads.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "torvac/lattice.hpp"
#include "torvac/rng.hpp"
#include "torvac/vacancy.hpp"
#include "torvac/walk.hpp"

namespace torvac {

inline constexpr int kRunFormatVersion = 1;

const char* build_git_hash();

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t point_seed(std::uint64_t seed, std::uint64_t point);
std::string hex64(std::uint64_t v);

const std::vector<std::string>& command_names();
// Published schema: command -> parameter -> {type, default, min?, max?, doc}.
const nlohmann::json& config_schema();

struct ExperimentConfig {
  std::string command;
  nlohmann::json params;  // every schema key present, validated
  std::uint64_t seed = 1;
  int jobs = 0;  // 0: runtime default
  std::string out_dir;

  // FNV-1a over the canonical dump of {format_version, command, params, seed};
  // jobs and out_dir do not enter.
  std::uint64_t hash() const;
  nlohmann::json resolved() const;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
};

// Throws ConfigError on unknown commands, unknown keys, wrong types and
// out-of-range values. `doc` may be empty or hold {command?, seed?, jobs?,
// out?, params?}.
ExperimentConfig make_config(const std::string& command, const nlohmann::json& doc,
                             const ConfigOverrides& overrides = {});
nlohmann::json read_config_file(const std::string& path);

// CSV table with preformatted cells.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string to_csv() const;
  // Cell lookup by column name; throws when absent.
  const std::string& cell(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string fmt(double v);
std::string fmt(std::int64_t v);
std::string fmt(std::uint64_t v);
std::string fmt(int v);

struct RunRecord {
  std::uint64_t config_hash = 0;
  std::uint64_t replica_index = 0;
  std::vector<std::pair<std::string, double>> metrics;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct CommandResult {
  std::string command;
  Table table;
  std::vector<RunRecord> records;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> failures;

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

// Runs `count` replicas on up to `jobs` threads; body(i, record) fills the
// metrics of replica i. Records come back ordered by replica index.
std::vector<RunRecord> run_replicas(std::uint64_t config_hash, std::size_t count, int jobs,
                                    const std::function<void(std::size_t, RunRecord&)>& body);

CommandResult cmd_survival(const ExperimentConfig& cfg);
CommandResult cmd_scan_u(const ExperimentConfig& cfg);
CommandResult cmd_segments(const ExperimentConfig& cfg);
CommandResult cmd_largest_ball(const ExperimentConfig& cfg);
CommandResult cmd_excursions(const ExperimentConfig& cfg);
CommandResult cmd_coupling(const ExperimentConfig& cfg);
CommandResult cmd_constants(const ExperimentConfig& cfg);
CommandResult cmd_qnu(const ExperimentConfig& cfg);
CommandResult cmd_coverage(const ExperimentConfig& cfg);
CommandResult cmd_variance(const ExperimentConfig& cfg);
CommandResult cmd_validate(const ExperimentConfig& cfg);

CommandResult run_command(const ExperimentConfig& cfg);
// Writes <out>/<command>.csv, .ndjson and .meta.json; no-op without out_dir.
void write_outputs(const ExperimentConfig& cfg, const CommandResult& result);

struct VarianceBudget {
  int d = 0;
  double u = 0.0;
  int L = 0, N = 0;
  int r_min = 0, r_max = 0;  // admissible range [10 L, floor(N / 10)]
  int r_best = 0;
  double value = 0.0;  // minimum of (r / N)^d + u L^d / r over the range

  double at(int r) const;
};

VarianceBudget variance_budget(int d, double u, int L, int N);

// Invariant suite with replaceable kernels, so that mutated implementations
// can be shown to fail it.
struct ValidateKernels {
  std::function<VReport(const TorusGeometry&, std::span<const std::uint8_t>, double, double)> detect_V;
  std::function<UReport(const TorusGeometry&, std::span<const std::uint8_t>, double)> detect_U;
  std::function<bool(const TorusGeometry&, std::span<const std::uint8_t>, double, CellIndex)> detect_C;
  std::function<VacantComponents(const OccupancyGrid&, std::uint64_t)> components;
  std::function<int(const TorusGeometry&, std::span<const std::uint8_t>)> largest_ball;

  static ValidateKernels library();
};

struct ValidateReport {
  std::size_t cases = 0;
  std::size_t checks = 0;
  std::vector<std::string> failures;  // "<check>: <witness>"
};

ValidateReport run_validation(const ValidateKernels& kernels, std::size_t random_cases, std::uint64_t seed);

}  // namespace torvac
