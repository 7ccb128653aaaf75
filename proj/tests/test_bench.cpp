#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "effica/bench.hpp"
#include "effica/random.hpp"

using namespace effica;

namespace {

const char* kConfig = R"(# two small experiments
seed = 42
[experiment]
name = row1
m = 2
n = 400
sources = 1
w_true = table3
replications = 3

[experiment]
name = mixed   # trailing comment
m = 2
n = 300
sources = 9 0
w_true = 2 1; 2 3
replications = 2
report = table4
)";

BenchmarkConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_benchmark_config(in, "c.cfg");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    return e.what();
  }
  return {};
}

bool same(const RunRecord& a, const RunRecord& b) {
  const auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.experiment == b.experiment && a.replication == b.replication && a.seed == b.seed &&
         a.algorithm == b.algorithm && a.status == b.status && eq(a.amari, b.amari) &&
         eq(a.frobenius, b.frobenius) && a.iterations == b.iterations &&
         a.converged == b.converged;
}

}  // namespace

TEST_CASE("config parsing") {
  const BenchmarkConfig c = parse(kConfig);
  CHECK(c.seed == 42);
  REQUIRE(c.experiments.size() == 2);
  const auto& a = c.experiments[0];
  CHECK(a.spec.name == "row1");
  CHECK(a.spec.n == 400);
  CHECK(a.spec.sources.size() == 2);
  CHECK(a.spec.sources[1].id == 1);
  CHECK(a.spec.W_true == mixing_preset("table3", 2));
  CHECK(a.spec.seed == experiment_seed(42, 0));
  CHECK(a.report == ReportConvention::Table3);
  const auto& b = c.experiments[1];
  CHECK(b.spec.sources[0].id == 9);
  CHECK(b.spec.sources[1].id == 0);
  CHECK(b.spec.W_true == mixing_preset("table3", 2));
  CHECK(b.spec.seed == experiment_seed(42, 1));
  CHECK(b.report == ReportConvention::Table4);
}

TEST_CASE("config overrides") {
  const BenchmarkConfig c = parse(
      "[experiment]\nname = a\nm = 2\nsources = 9\nseed = 7\nmixture_weight = 0.25\n"
      "standardize = false\nparam = 2\n");
  CHECK(c.seed == 1);
  const auto& s = c.experiments[0].spec;
  CHECK(s.seed == 7);
  CHECK(s.W_true.isIdentity(0));
  CHECK(s.replications == 1);
  CHECK(s.sources[0].mixture_weight == 0.25);
  CHECK(s.sources[1].param == 2.0);
  CHECK_FALSE(s.sources[0].standardize);
}

TEST_CASE("config errors name the line") {
  CHECK(parse_error("[experiment]\nname = a\nsources = 1\nbogus = 3\n") ==
        "c.cfg:4: unknown key 'bogus'");
  CHECK(parse_error("bogus = 3\n") == "c.cfg:1: unknown top-level key 'bogus'");
  CHECK(parse_error("[experiment]\nname = a\nsources = 1\n[experiment]\nname = a\nsources = 1\n") ==
        "c.cfg: duplicate experiment name 'a'");
  CHECK(parse_error("[experiment]\nname = a\nsources = 1\nreport = table9\n") ==
        "c.cfg:4: report must be table3 or table4");
  CHECK(parse_error("[experiments]\n") == "c.cfg:1: unknown section '[experiments]'");
  CHECK(parse_error("seed = 1\n") == "c.cfg: no [experiment] blocks");
  CHECK(parse_error("[experiment]\nname = a\nn = ten\n") ==
        "c.cfg:3: expected an integer, got 'ten'");
  CHECK(parse_error("[experiment]\nname = a\nsources = 1\nw_true = 1 0; 0\n").find("square") !=
        std::string::npos);
  CHECK(parse_error("[experiment]\nname = a\nsources = 13\nm = 3\n").find("c.cfg:1 (a)") == 0);
  CHECK(parse_error("[experiment]\nname = a\nsources = 1\nw_true = 1 1; 1 1\n")
            .find("singular") != std::string::npos);
  CHECK(parse_error("[experiment]\nsources = 1\n") == "c.cfg:1: experiment needs a name");
}

TEST_CASE("seed derivation") {
  CHECK(experiment_seed(42, 0) == derive_seed(42, 0xe000000000000000ULL));
  CHECK(experiment_seed(42, 1) != experiment_seed(42, 0));
  const auto opts = replication_options(SolverConfig{}, 99);
  CHECK(opts.fastica.seed == derive_seed(99, 1));
  CHECK(opts.solver.cv_seed == derive_seed(99, 2));
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("effica") == Algorithm::Effica);
  CHECK(parse_algorithm(algorithm_name(Algorithm::FasticaInit)) == Algorithm::FasticaInit);
  CHECK_THROWS_AS(parse_algorithm("ica"), Error);
}

TEST_CASE("benchmark grid, determinism and CSV round trip") {
  const BenchmarkConfig c = parse(kConfig);
  BenchmarkOptions opts;
  const auto serial = run_benchmark(c, opts);
  CHECK(serial.size() == (3 + 2) * 2);
  CHECK(serial[0].experiment == "row1");
  CHECK(serial[0].algorithm == "effica");
  CHECK(serial[1].algorithm == "fastica-init");
  CHECK(serial[2].replication == 1);
  CHECK(serial[0].seed == replication_seed(experiment_seed(42, 0), 0));
  for (const auto& r : serial) {
    CHECK(r.status == "ok");
    CHECK(r.amari >= 0.0);
    CHECK(r.wall_time_ms == 0.0);
  }

  opts.jobs = 4;
  const auto parallel = run_benchmark(c, opts);
  CHECK(parallel == serial);

  std::stringstream s;
  write_records_csv(s, serial, false);
  const auto back = read_records_csv(s, "r.csv");
  REQUIRE(back.size() == serial.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(same(back[i], serial[i]));

  std::stringstream t;
  opts.timing = true;
  const auto timed = run_benchmark(c, opts);
  write_records_csv(t, timed, true);
  CHECK(read_records_csv(t, "r.csv").size() == timed.size());
}

TEST_CASE("overrides and algorithm selection") {
  const BenchmarkConfig c = parse(kConfig);
  BenchmarkOptions opts;
  opts.replications_override = 1;
  opts.algorithms = {Algorithm::FasticaInit};
  opts.seed = 5;
  const auto recs = run_benchmark(c, opts);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].algorithm == "fastica-init");
  CHECK(recs[0].seed == replication_seed(experiment_seed(5, 0), 0));

  opts.jobs = 0;
  CHECK_THROWS_AS(run_benchmark(c, opts), Error);
  opts.jobs = 1;
  opts.algorithms.clear();
  CHECK_THROWS_AS(run_benchmark(c, opts), Error);
}

TEST_CASE("summary of a single replication equals the record") {
  const BenchmarkConfig c = parse(kConfig);
  BenchmarkOptions opts;
  opts.replications_override = 1;
  const auto recs = run_benchmark(c, opts);
  const auto rows = summarize_records(c, recs);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mean_amari == doctest::Approx(recs[0].amari));
  CHECK(rows[0].sqrt_mse == doctest::Approx(std::abs(recs[0].frobenius)));
  CHECK(rows[0].scaled_sqrt_mse == doctest::Approx(1000.0 * rows[0].sqrt_mse));
  CHECK(rows[2].report == ReportConvention::Table4);
  CHECK(rows[2].scaled_sqrt_mse == doctest::Approx(10.0 * rows[2].sqrt_mse));
  std::ostringstream out;
  write_summary_csv(out, rows);
  CHECK(out.str().rfind("experiment,algorithm,report,replications,failures,", 0) == 0);
}

TEST_CASE("failed replications become records") {
  const BenchmarkConfig c = parse("[experiment]\nname = tiny\nn = 15\nsources = 1\n");
  const auto recs = run_benchmark(c, {});
  REQUIRE(recs.size() == 2);
  const auto rows = summarize_records(c, recs);
  REQUIRE(rows.size() == 2);
  // The initializer copes with 15 samples; the spline stage does not.
  CHECK(recs[0].algorithm == "effica");
  CHECK(recs[0].status == "invalid-argument");
  CHECK(std::isnan(recs[0].amari));
  CHECK(std::isnan(recs[0].frobenius));
  CHECK(recs[1].status == "ok");
  CHECK(rows[0].failures == 1);
  CHECK(std::isnan(rows[0].mean_amari));
  CHECK(rows[1].failures == 0);
}

TEST_CASE("record CSV errors") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_records_csv(empty, "r.csv"), Error);
  std::istringstream bad_header("a,b\n");
  CHECK_THROWS_AS(read_records_csv(bad_header, "r.csv"), Error);
  std::istringstream short_row(
      "experiment,replication,seed,algorithm,status,amari,frobenius,iterations,converged\n"
      "a,0,1,effica,ok,0.1\n");
  try {
    read_records_csv(short_row, "r.csv");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "r.csv:2: wrong field count");
  }
}
