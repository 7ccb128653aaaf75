// effica command-line front end.
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "effica/bench.hpp"
#include "effica/io.hpp"
#include "effica/metrics.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct SolverFlags {
  double tol = 1e-8;
  int max_iters = 100;
  double c = 5.0;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--tol", f.tol, "Frobenius norm of the update that ends the iteration")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", f.max_iters, "Iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--c", f.c, "Boundary constant of the spline working interval")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

effica::SolverConfig to_config(const SolverFlags& f) {
  effica::SolverConfig cfg;
  cfg.step_tol = f.tol;
  cfg.max_iters = f.max_iters;
  cfg.score_c = f.c;
  cfg.validate();
  return cfg;
}

std::string summary_path_for(const std::string& records) {
  const std::string ext = ".csv";
  if (records.size() > ext.size() && records.compare(records.size() - ext.size(), ext.size(), ext) == 0) {
    return records.substr(0, records.size() - ext.size()) + "_summary.csv";
  }
  return records + "_summary.csv";
}

struct SeparateArgs {
  std::string input;
  std::string output;
  bool header = false;
  std::string truth;
  std::uint64_t seed = 1;
  SolverFlags solver;
};

int cmd_separate(const SeparateArgs& a) {
  const Eigen::MatrixXd X = effica::read_matrix_csv_file(a.input, a.header);
  const effica::SeparationOptions opts = effica::replication_options(to_config(a.solver), a.seed);
  const effica::SeparationResult res = effica::separate(X, opts);
  const effica::UnmixingEstimate& est = res.estimate;

  const Eigen::MatrixXd sources = est.W_hat * (X.colwise() - est.mean);
  effica::write_matrix_csv_file(a.output + "_W.csv", est.W_hat);
  effica::write_matrix_csv_file(a.output + "_sources.csv", sources);

  std::cout << "channels " << X.rows() << ", samples " << X.cols() << '\n';
  std::cout << "knots";
  for (int c : est.plan.counts) std::cout << ' ' << c;
  std::cout << '\n';
  std::cout << "iterations " << est.iterations << (est.converged ? " (converged)" : " (not converged)")
            << ", final residual " << effica::format_double(est.final_residual) << '\n';
  if (!a.truth.empty()) {
    const Eigen::MatrixXd W_true = effica::read_matrix_csv_file(a.truth, false);
    if (W_true.rows() != X.rows() || W_true.cols() != X.rows()) {
      throw effica::Error(effica::ErrorKind::InvalidArgument,
                          a.truth + ": truth must be " + std::to_string(X.rows()) + " x " +
                              std::to_string(X.rows()));
    }
    const auto init = effica::frobenius_error(res.initial.W0, W_true);
    const auto fin = effica::frobenius_error(est.W_hat, W_true);
    std::cout << "amari initial " << effica::format_double(init.amari) << ", final "
              << effica::format_double(fin.amari) << '\n';
    std::cout << "frobenius initial " << effica::format_double(init.frobenius) << ", final "
              << effica::format_double(fin.frobenius) << '\n';
  }
  return kOk;
}

struct BenchmarkArgs {
  std::string config;
  std::string output;
  std::string summary;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::vector<std::string> algorithms;
  int jobs = 1;
  bool timing = false;
  SolverFlags solver;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  const effica::BenchmarkConfig config = effica::read_benchmark_config_file(a.config);
  effica::BenchmarkOptions opts;
  opts.jobs = a.jobs > 0 ? a.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opts.seed = a.seed;
  opts.replications_override = a.replications;
  opts.solver = to_config(a.solver);
  opts.timing = a.timing;
  if (!a.algorithms.empty()) {
    opts.algorithms.clear();
    for (const auto& name : a.algorithms) opts.algorithms.push_back(effica::parse_algorithm(name));
  }

  const auto records = effica::run_benchmark(config, opts);
  {
    std::ofstream out(a.output);
    if (!out) throw effica::Error(effica::ErrorKind::Parse, a.output + ": cannot open for writing");
    effica::write_records_csv(out, records, a.timing);
  }
  effica::BenchmarkConfig effective = config;
  if (a.replications) {
    for (auto& e : effective.experiments) e.spec.replications = *a.replications;
  }
  const auto rows = effica::summarize_records(effective, records);
  const std::string summary = a.summary.empty() ? summary_path_for(a.output) : a.summary;
  {
    std::ofstream out(summary);
    if (!out) throw effica::Error(effica::ErrorKind::Parse, summary + ": cannot open for writing");
    effica::write_summary_csv(out, rows);
  }
  int failures = 0;
  for (const auto& r : records) failures += r.status != "ok";
  std::cout << records.size() << " records (" << failures << " failed) -> " << a.output << '\n';
  for (const auto& row : rows) {
    std::cout << row.experiment << ' ' << row.algorithm << ": amari "
              << effica::format_double(row.scaled_amari) << ", sqrt-mse "
              << effica::format_double(row.scaled_sqrt_mse) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Efficient ICA by B-spline score estimation"};
  app.require_subcommand(1);

  SeparateArgs sep;
  auto* separate = app.add_subcommand("separate", "Estimate the unmixing matrix of a CSV data set");
  separate->add_option("input", sep.input, "CSV, one row per channel")->required();
  separate->add_option("-o,--output", sep.output, "Output prefix for _W.csv and _sources.csv")
      ->required();
  separate->add_flag("--header", sep.header, "Skip the first non-empty line of the input");
  separate->add_option("--truth", sep.truth, "CSV with the true unmixing matrix; prints errors");
  separate->add_option("--seed", sep.seed, "Seed for FastICA restarts and knot CV")
      ->capture_default_str();
  add_solver_flags(separate, sep.solver);

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run a simulation grid from a config file");
  benchmark->add_option("config", bench.config, "Benchmark config file")->required();
  benchmark->add_option("-o,--output", bench.output, "Records CSV")->required();
  benchmark->add_option("--summary", bench.summary, "Summary CSV (default: <output>_summary.csv)");
  benchmark->add_option("--seed", bench.seed, "Override the master seed");
  benchmark->add_option("--replications-override", bench.replications,
                        "Replications for every experiment")
      ->check(CLI::PositiveNumber);
  benchmark->add_option("--algorithms", bench.algorithms, "effica, fastica-init")
      ->delimiter(',')
      ->check(CLI::IsMember({"effica", "fastica-init"}));
  benchmark->add_option("-j,--jobs", bench.jobs, "Worker threads, 0 for all cores")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  benchmark->add_flag("--timing", bench.timing, "Add a wall_time_ms column");
  add_solver_flags(benchmark, bench.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*separate) return cmd_separate(sep);
    return cmd_benchmark(bench);
  } catch (const effica::Error& e) {
    std::cerr << "effica: " << effica::to_string(e.kind()) << ": " << e.what() << '\n';
    return e.is_data_error() ? kData : kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "effica: " << e.what() << '\n';
    return kData;
  }
}
