#include "effica/bench.hpp"

#include <atomic>
#include <chrono>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "effica/io.hpp"
#include "effica/metrics.hpp"
#include "effica/random.hpp"

namespace effica {

SeparationResult separate(const Dataset& X, const SeparationOptions& options) {
  options.solver.validate();
  CenteredData centered = center_data(X);
  SeparationResult out;
  out.initial = initial_estimate(centered.data, options.fastica);
  const KnotPlan plan = fix_knots(centered.data, out.initial.W0, options.solver);
  out.estimate = run_with_plan(centered.data, out.initial.W0, plan, options.solver);
  out.estimate.mean = std::move(centered.mean);
  return out;
}

SeparationOptions replication_options(const SolverConfig& base, std::uint64_t replication_seed) {
  SeparationOptions opts;
  opts.solver = base;
  opts.solver.cv_seed = derive_seed(replication_seed, 2);
  opts.fastica.seed = derive_seed(replication_seed, 1);
  return opts;
}

const char* algorithm_name(Algorithm a) {
  return a == Algorithm::Effica ? "effica" : "fastica-init";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "effica") return Algorithm::Effica;
  if (name == "fastica-init") return Algorithm::FasticaInit;
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + name + "'");
}

std::uint64_t experiment_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, 0xe000000000000000ULL + index);
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_int(const std::string& text, const std::string& where) {
  Int value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Parse, where + ": expected an integer, got '" + text + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find_first_of(seps, start);
    const std::string tok = trim(s.substr(start, pos == std::string::npos ? std::string::npos
                                                                          : pos - start));
    if (!tok.empty()) out.push_back(tok);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

Eigen::MatrixXd parse_inline_matrix(const std::string& text, const std::string& where) {
  const auto rows = split(text, ";");
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    std::vector<double> row;
    for (const auto& tok : split(r, " ,\t")) row.push_back(parse_double(tok, where));
    values.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd W(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(values[i].size()) != m) {
      throw Error(ErrorKind::Parse, where + ": inline w_true must be square");
    }
    for (Eigen::Index j = 0; j < m; ++j) W(i, j) = values[i][j];
  }
  return W;
}

struct PendingExperiment {
  std::size_t line = 0;
  std::string name;
  Eigen::Index m = 2;
  Eigen::Index n = 1000;
  std::vector<int> source_ids;
  std::string w_true = "identity";
  int replications = 1;
  std::optional<std::uint64_t> seed;
  ReportConvention report = ReportConvention::Table3;
  std::optional<double> mixture_weight;
  std::optional<double> param;
  bool standardize = true;
};

ExperimentEntry finish(const PendingExperiment& p, std::uint64_t master, std::size_t index,
                       const std::string& source_name) {
  const std::string where = source_name + ":" + std::to_string(p.line);
  if (p.name.empty()) throw Error(ErrorKind::Parse, where + ": experiment needs a name");
  if (p.name.find_first_of(", \t\"") != std::string::npos) {
    throw Error(ErrorKind::Parse, where + ": experiment name may not contain commas, quotes or spaces");
  }
  if (p.source_ids.empty()) throw Error(ErrorKind::Parse, where + ": experiment needs sources");
  ExperimentEntry e;
  e.report = p.report;
  ExperimentSpec& s = e.spec;
  s.name = p.name;
  s.m = p.m;
  s.n = p.n;
  s.replications = p.replications;
  s.seed = p.seed.value_or(experiment_seed(master, index));
  try {
    if (p.source_ids.size() == 1) {
      s.sources = expand_case(p.source_ids.front(), p.m);
    } else {
      for (const int id : p.source_ids) {
        if (id > 12) throw Error(ErrorKind::InvalidArgument, "paired case in a source list");
        s.sources.push_back(source_spec(id));
      }
    }
    for (auto& src : s.sources) {
      src.mixture_weight = p.mixture_weight;
      src.param = p.param;
      src.standardize = p.standardize;
    }
    const bool inline_matrix = p.w_true.find_first_of("0123456789+-.") == 0;
    s.W_true = inline_matrix ? parse_inline_matrix(p.w_true, where) : mixing_preset(p.w_true, p.m);
    s.validate();
  } catch (const Error& err) {
    throw Error(ErrorKind::Parse, where + " (" + p.name + "): " + err.what());
  }
  return e;
}

}  // namespace

BenchmarkConfig parse_benchmark_config(std::istream& in, const std::string& source_name) {
  BenchmarkConfig config;
  std::vector<PendingExperiment> pending;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[experiment]") {
        throw Error(ErrorKind::Parse, where + ": unknown section '" + line + "'");
      }
      pending.emplace_back();
      pending.back().line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw Error(ErrorKind::Parse, where + ": empty value for '" + key + "'");

    if (pending.empty()) {
      if (key == "seed") {
        config.seed = parse_int<std::uint64_t>(value, where);
      } else {
        throw Error(ErrorKind::Parse, where + ": unknown top-level key '" + key + "'");
      }
      continue;
    }
    PendingExperiment& p = pending.back();
    if (key == "name") {
      p.name = value;
    } else if (key == "m") {
      p.m = parse_int<Eigen::Index>(value, where);
    } else if (key == "n") {
      p.n = parse_int<Eigen::Index>(value, where);
    } else if (key == "sources") {
      p.source_ids.clear();
      for (const auto& tok : split(value, ", \t")) p.source_ids.push_back(parse_int<int>(tok, where));
    } else if (key == "w_true") {
      p.w_true = value;
    } else if (key == "replications") {
      p.replications = parse_int<int>(value, where);
    } else if (key == "seed") {
      p.seed = parse_int<std::uint64_t>(value, where);
    } else if (key == "report") {
      if (value == "table3") {
        p.report = ReportConvention::Table3;
      } else if (value == "table4") {
        p.report = ReportConvention::Table4;
      } else {
        throw Error(ErrorKind::Parse, where + ": report must be table3 or table4");
      }
    } else if (key == "mixture_weight") {
      p.mixture_weight = parse_double(value, where);
    } else if (key == "param") {
      p.param = parse_double(value, where);
    } else if (key == "standardize") {
      if (value != "true" && value != "false") {
        throw Error(ErrorKind::Parse, where + ": standardize must be true or false");
      }
      p.standardize = value == "true";
    } else {
      throw Error(ErrorKind::Parse, where + ": unknown key '" + key + "'");
    }
  }
  if (pending.empty()) throw Error(ErrorKind::Parse, source_name + ": no [experiment] blocks");

  std::set<std::string> names;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!names.insert(pending[i].name).second) {
      throw Error(ErrorKind::Parse, source_name + ": duplicate experiment name '" +
                                        pending[i].name + "'");
    }
    config.experiments.push_back(finish(pending[i], config.seed, i, source_name));
  }
  return config;
}

BenchmarkConfig read_benchmark_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open");
  return parse_benchmark_config(in, path);
}

// ---------------------------------------------------------------------------
// Grid execution

namespace {

struct Task {
  std::size_t experiment;
  int replication;
};

RunRecord base_record(const ExperimentSpec& spec, int rep, std::uint64_t seed, Algorithm a) {
  RunRecord r;
  r.experiment = spec.name;
  r.replication = rep;
  r.seed = seed;
  r.algorithm = algorithm_name(a);
  return r;
}

void mark_failed(RunRecord& r, const std::string& status) {
  r.status = status;
  r.amari = r.frobenius = std::nan("");
  r.iterations = 0;
  r.converged = false;
}

std::vector<RunRecord> run_replication(const ExperimentSpec& spec, int rep,
                                       const BenchmarkOptions& options) {
  const std::uint64_t seed = replication_seed(spec.seed, rep);
  std::vector<RunRecord> out;
  for (const Algorithm a : options.algorithms) out.push_back(base_record(spec, rep, seed, a));
  auto find = [&](Algorithm a) -> RunRecord* {
    for (auto& r : out)
      if (r.algorithm == algorithm_name(a)) return &r;
    return nullptr;
  };
  RunRecord* effica_rec = find(Algorithm::Effica);
  RunRecord* init_rec = find(Algorithm::FasticaInit);

  using Clock = std::chrono::steady_clock;
  // Timing stays zero unless requested so that records are reproducible.
  const auto ms_since = [&](Clock::time_point t0) {
    if (!options.timing) return 0.0;
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  const SeparationOptions opts = replication_options(options.solver, seed);
  CenteredData centered;
  InitialEstimate initial;
  try {
    const auto t0 = Clock::now();
    const GeneratedData data = make_dataset(spec, rep);
    centered = center_data(data.X);
    initial = initial_estimate(centered.data, opts.fastica);
    if (init_rec) {
      const auto rep_metrics = frobenius_error(initial.W0, spec.W_true);
      init_rec->amari = rep_metrics.amari;
      init_rec->frobenius = rep_metrics.frobenius;
      init_rec->iterations = initial.fastica.iterations;
      init_rec->converged = initial.fastica.converged;
      init_rec->wall_time_ms = ms_since(t0);
    }
  } catch (const Error& e) {
    for (auto& r : out) mark_failed(r, to_string(e.kind()));
    return out;
  }

  if (effica_rec) {
    try {
      const auto t0 = Clock::now();
      const KnotPlan plan = fix_knots(centered.data, initial.W0, opts.solver);
      const UnmixingEstimate est = run_with_plan(centered.data, initial.W0, plan, opts.solver);
      const auto rep_metrics = frobenius_error(est.W_hat, spec.W_true);
      effica_rec->amari = rep_metrics.amari;
      effica_rec->frobenius = rep_metrics.frobenius;
      effica_rec->iterations = est.iterations;
      effica_rec->converged = est.converged;
      effica_rec->wall_time_ms = ms_since(t0);
    } catch (const Error& e) {
      mark_failed(*effica_rec, to_string(e.kind()));
    }
  }
  return out;
}

}  // namespace

std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config,
                                     const BenchmarkOptions& options) {
  options.solver.validate();
  if (options.jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
  if (options.algorithms.empty()) throw Error(ErrorKind::InvalidArgument, "no algorithms selected");

  std::vector<ExperimentSpec> specs;
  for (std::size_t i = 0; i < config.experiments.size(); ++i) {
    ExperimentSpec s = config.experiments[i].spec;
    if (options.seed) s.seed = experiment_seed(*options.seed, i);
    if (options.replications_override) s.replications = *options.replications_override;
    s.validate();
    specs.push_back(std::move(s));
  }

  std::vector<Task> tasks;
  for (std::size_t e = 0; e < specs.size(); ++e)
    for (int r = 0; r < specs[e].replications; ++r) tasks.push_back({e, r});

  // Each task owns its slot, so the output order never depends on scheduling.
  std::vector<std::vector<RunRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      slots[t] = run_replication(specs[tasks[t].experiment], tasks[t].replication, options);
    }
  };
  const auto nthreads = static_cast<std::size_t>(options.jobs);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < std::min(nthreads, tasks.size()); ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<RunRecord> records;
  records.reserve(tasks.size() * options.algorithms.size());
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));
  return records;
}

// ---------------------------------------------------------------------------
// CSV

namespace {
constexpr const char* kRecordHeader =
    "experiment,replication,seed,algorithm,status,amari,frobenius,iterations,converged";
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, bool timing) {
  out << kRecordHeader << (timing ? ",wall_time_ms" : "") << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.replication << ',' << r.seed << ',' << r.algorithm << ','
        << r.status << ',' << format_double(r.amari) << ',' << format_double(r.frobenius) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0);
    if (timing) out << ',' << format_double(r.wall_time_ms);
    out << '\n';
  }
}

std::vector<RunRecord> read_records_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, source_name + ": empty input");
  const std::string header = trim(line);
  const bool timing = header == std::string(kRecordHeader) + ",wall_time_ms";
  if (!timing && header != kRecordHeader) {
    throw Error(ErrorKind::Parse, source_name + ":1: unexpected header");
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(trim(cell));
    if (f.size() != (timing ? 10u : 9u)) throw Error(ErrorKind::Parse, where + ": wrong field count");
    RunRecord r;
    r.experiment = f[0];
    r.replication = parse_int<int>(f[1], where);
    r.seed = parse_int<std::uint64_t>(f[2], where);
    r.algorithm = f[3];
    r.status = f[4];
    r.amari = parse_double(f[5], where);
    r.frobenius = parse_double(f[6], where);
    r.iterations = parse_int<int>(f[7], where);
    r.converged = parse_int<int>(f[8], where) != 0;
    if (timing) r.wall_time_ms = parse_double(f[9], where);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SummaryRow> summarize_records(const BenchmarkConfig& config,
                                          const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> rows;
  for (const auto& entry : config.experiments) {
    for (const Algorithm a : {Algorithm::Effica, Algorithm::FasticaInit}) {
      std::vector<double> amari, frob;
      int failures = 0, total = 0;
      for (const auto& r : records) {
        if (r.experiment != entry.spec.name || r.algorithm != algorithm_name(a)) continue;
        ++total;
        if (r.status != "ok") {
          ++failures;
          continue;
        }
        amari.push_back(r.amari);
        frob.push_back(r.frobenius);
      }
      if (total == 0) continue;
      SummaryRow row;
      row.experiment = entry.spec.name;
      row.algorithm = algorithm_name(a);
      row.report = entry.report;
      row.replications = total;
      row.failures = failures;
      if (amari.empty()) {
        row.mean_amari = row.sqrt_mse = row.scaled_amari = row.scaled_sqrt_mse = std::nan("");
      } else {
        const Summary s = summarize(frob, amari);
        row.mean_amari = s.mean_amari;
        row.sqrt_mse = s.sqrt_mse;
        row.scaled_amari = 1000.0 * s.mean_amari;
        row.scaled_sqrt_mse =
            (entry.report == ReportConvention::Table3 ? 1000.0 : 10.0) * s.sqrt_mse;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "experiment,algorithm,report,replications,failures,mean_amari,sqrt_mse,scaled_amari,"
         "scaled_sqrt_mse\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.algorithm << ','
        << (r.report == ReportConvention::Table3 ? "table3" : "table4") << ',' << r.replications
        << ',' << r.failures << ',' << format_double(r.mean_amari) << ','
        << format_double(r.sqrt_mse) << ',' << format_double(r.scaled_amari) << ','
        << format_double(r.scaled_sqrt_mse) << '\n';
  }
}

}  // namespace effica
