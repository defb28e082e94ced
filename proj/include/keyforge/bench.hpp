#pragma once

#include "keyforge/cnf.hpp"
#include "keyforge/netlist.hpp"
#include "keyforge/obfuscate.hpp"
#include "keyforge/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kf {

struct ExperimentSpec {
  /// `.bench` files or directories (every `.bench` inside, sorted by name).
  std::vector<std::filesystem::path> circuits;
  std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  std::vector<unsigned> overheads{1, 2, 3, 5, 10, 25};
  std::vector<BackendSpec> backends{BackendSpec::embedded()};
  unsigned repetitions = 15;
  double timeout = 86400.0;
  std::uint64_t seed = 1;
  /// Worker processes; 0 runs every cell in the calling process.
  unsigned jobs = 0;
  /// Append-only record journal; completed cells are skipped on rerun.
  std::optional<std::filesystem::path> journal;
  DivcEncoding encoding = DivcEncoding::Plain;
};

/// Reads a JSON experiment description. Relative circuit and journal paths
/// are resolved against `base_dir`. Throws InvalidArgument on unknown keys
/// or invalid values.
ExperimentSpec parse_experiment(std::string_view json_text, const std::filesystem::path &base_dir = {});
ExperimentSpec read_experiment_file(const std::filesystem::path &path);

enum class RunStatus { Solved, Timeout, Error };
std::string_view to_string(RunStatus status);
std::optional<RunStatus> parse_run_status(std::string_view text);

struct RunRecord {
  std::string circuit;
  std::string scheme;
  unsigned overhead = 0;
  std::string backend;
  unsigned repetition = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Error;
  double wall_time = 0.0; ///< seconds; timeouts are recorded at the limit
  std::uint64_t peak_memory = 0;
  std::uint64_t iterations = 0;
  double mean_learned_len = 0.0;
  bool key_verified = false;

  friend bool operator==(const RunRecord &, const RunRecord &) = default;
};

struct CorpusEntry {
  std::string name;
  Circuit circuit;
};

/// Throws CorpusEmpty when no circuit is found.
std::vector<CorpusEntry> load_corpus(std::span<const std::filesystem::path> paths);

/// Seed shared by every backend and repetition of one locked instance.
std::uint64_t lock_seed(std::string_view circuit, Scheme scheme, unsigned overhead, std::uint64_t base_seed);
/// Solver seed of repetition `r` of a cell.
std::uint64_t cell_seed(std::string_view circuit, Scheme scheme, unsigned overhead, std::string_view backend,
                        unsigned repetition, std::uint64_t base_seed);

/// Attacks one locked instance once and summarizes the outcome. Never
/// throws for attack failures; they become status Error.
RunRecord run_cell(const LockedCircuit &locked, const Circuit &oracle, const BackendSpec &backend,
                   const RunRecord &cell, double timeout, DivcEncoding encoding);

/// Called after each finished record (from the coordinating process).
using ProgressFn = std::function<void(const RunRecord &)>;

/// One record per (circuit, scheme, overhead, backend, repetition), in that
/// nesting order. Throws CorpusEmpty and NoBackend.
std::vector<RunRecord> run_matrix(const ExperimentSpec &spec, const ProgressFn &progress = {});

//===----------------------------------------------------------------------===//
// Aggregation and output
//===----------------------------------------------------------------------===//

struct SampleStats {
  std::size_t count = 0;
  double sum = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Sorted-sample statistics; quartiles by linear interpolation between
/// order statistics.
SampleStats sample_stats(std::vector<double> values);

struct GroupSummary {
  std::string dimension; ///< "scheme" or "backend"
  std::string key;
  unsigned overhead = 0;
  bool solved_only = false;
  std::size_t records = 0;
  std::size_t timeouts = 0; ///< censored at the limit in `time`
  std::size_t errors = 0;
  SampleStats time;
  SampleStats memory;
  SampleStats iterations;
};

struct SummaryTable {
  std::vector<GroupSummary> groups;
};

/// Groups by (scheme, overhead) and (backend, overhead), each both over all
/// records and over solved records only. Throws EmptyInput.
SummaryTable aggregate(std::span<const RunRecord> records);

struct CsvOptions {
  /// Writes 0 in the wall_time column, for run-to-run comparisons.
  bool redact_wall_time = false;
};

std::string emit_csv(std::span<const RunRecord> records, const CsvOptions &options = {});
std::string emit_csv(const SummaryTable &table);
std::vector<RunRecord> parse_records_csv(std::string_view text);

/// RFC 4180 helpers.
std::string csv_row(std::span<const std::string> fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

enum class PlotKind { TimeVsOverhead, BackendBars, MemoryVsOverhead };
std::string emit_plot(const SummaryTable &table, PlotKind kind);

} // namespace kf
