#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "effica/initializer.hpp"
#include "effica/solver.hpp"
#include "effica/sources.hpp"

namespace effica {

struct SeparationOptions {
  SolverConfig solver;
  FastIcaOptions fastica;
};

struct SeparationResult {
  InitialEstimate initial;
  UnmixingEstimate estimate;
};

/// Full pipeline: center, whiten + FastICA for the start, then EFFICA.
SeparationResult separate(const Dataset& X, const SeparationOptions& options);

/// Seeds for one replication's FastICA restarts and CV splits.
SeparationOptions replication_options(const SolverConfig& base, std::uint64_t replication_seed);

enum class Algorithm { Effica, FasticaInit };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

/// Scaling convention of the summary: "table3" reports 1000 x mean Amari
/// and 1000 x sqrt(MSE); "table4" reports 10 x sqrt(MSE).
enum class ReportConvention { Table3, Table4 };

struct ExperimentEntry {
  ExperimentSpec spec;
  ReportConvention report = ReportConvention::Table3;
};

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  std::vector<ExperimentEntry> experiments;
};

/// key = value lines with repeated [experiment] blocks; see README.
BenchmarkConfig parse_benchmark_config(std::istream& in, const std::string& source_name);
BenchmarkConfig read_benchmark_config_file(const std::string& path);

struct BenchmarkOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications_override;
  SolverConfig solver;
  std::vector<Algorithm> algorithms{Algorithm::Effica, Algorithm::FasticaInit};
  bool timing = false;
};

struct RunRecord {
  std::string experiment;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  std::string status = "ok";
  double amari = 0.0;
  double frobenius = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_ms = 0.0;

  bool operator==(const RunRecord&) const = default;
};

/// Seed of experiment `index`: its explicit seed if given, else derived from
/// the master seed. Resolved by the parser; exposed for documentation tests.
std::uint64_t experiment_seed(std::uint64_t master, std::size_t index);

/// One record per (experiment, replication, algorithm) in that order,
/// whatever the job count. Replication failures become records with a
/// non-"ok" status.
std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config,
                                     const BenchmarkOptions& options);

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, bool timing);
std::vector<RunRecord> read_records_csv(std::istream& in, const std::string& source_name);

struct SummaryRow {
  std::string experiment;
  std::string algorithm;
  ReportConvention report = ReportConvention::Table3;
  int replications = 0;
  int failures = 0;
  double mean_amari = 0.0;
  double sqrt_mse = 0.0;
  double scaled_amari = 0.0;
  double scaled_sqrt_mse = 0.0;
};

std::vector<SummaryRow> summarize_records(const BenchmarkConfig& config,
                                          const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace effica
