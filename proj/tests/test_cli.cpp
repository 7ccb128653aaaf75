#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "effica/bench.hpp"
#include "effica/io.hpp"

namespace fs = std::filesystem;
using namespace effica;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

fs::path tmp_dir() {
  const fs::path dir(EFFICA_TEST_TMP);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome run_cli(const std::string& args) {
  const fs::path log = tmp_dir() / "last_output.txt";
  const std::string cmd = std::string("\"") + EFFICA_CLI_PATH + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(log);
  return o;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kConfig = R"(seed = 9
[experiment]
name = expo
n = 300
sources = 1
w_true = table3
replications = 3
[experiment]
name = paired
n = 300
sources = 13
w_true = 1 0.5; 0.2 1
replications = 2
report = table4
)";

}  // namespace

TEST_CASE("separate recovers mixed exponentials") {
  ExperimentSpec s;
  s.name = "cli";
  s.n = 1000;
  s.sources = expand_case(1, 2);
  s.W_true = mixing_preset("table3", 2);
  s.seed = 20240601;
  const auto d = make_dataset(s, 0);
  const fs::path dir = tmp_dir();
  write_matrix_csv_file((dir / "mixed.csv").string(), d.X);
  write_matrix_csv_file((dir / "truth.csv").string(), d.W_true);

  const Outcome o = run_cli("separate " + (dir / "mixed.csv").string() + " -o " +
                            (dir / "sep").string() + " --truth " + (dir / "truth.csv").string());
  INFO(o.out);
  REQUIRE(o.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(o.out, m, std::regex("amari initial (\\S+), final (\\S+)")));
  CHECK(std::stod(m[2].str()) < 0.05);
  CHECK(o.out.find("iterations ") != std::string::npos);

  const Eigen::MatrixXd W = read_matrix_csv_file((dir / "sep_W.csv").string());
  CHECK(W.rows() == 2);
  CHECK(W.cols() == 2);
  const Eigen::MatrixXd S = read_matrix_csv_file((dir / "sep_sources.csv").string());
  CHECK(S.rows() == 2);
  CHECK(S.cols() == 1000);
  const Eigen::MatrixXd expect = W * (d.X.colwise() - d.X.rowwise().mean());
  CHECK((S - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("separate reports bad input") {
  const fs::path dir = tmp_dir();
  write_text(dir / "empty.csv", "");
  Outcome o = run_cli("separate " + (dir / "empty.csv").string() + " -o " + (dir / "x").string());
  CHECK(o.code == 2);
  CHECK(o.out.find("empty input") != std::string::npos);

  write_text(dir / "bad.csv", "1,2,3\n4,five,6\n");
  o = run_cli("separate " + (dir / "bad.csv").string() + " -o " + (dir / "x").string());
  CHECK(o.code == 2);
  CHECK(o.out.find("bad.csv:2:2") != std::string::npos);

  write_text(dir / "short.csv", "1,2,3\n4,5,6\n");
  o = run_cli("separate " + (dir / "short.csv").string() + " -o " + (dir / "x").string());
  CHECK(o.code != 0);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("separate").code == 1);
  CHECK(run_cli("separate in.csv -o out --tol -1").code == 1);
  CHECK(run_cli("benchmark c.cfg -o r.csv --algorithms nope").code == 1);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("benchmark output is identical across job counts") {
  const fs::path dir = tmp_dir();
  write_text(dir / "grid.cfg", kConfig);
  const std::string cfg = (dir / "grid.cfg").string();
  const Outcome a = run_cli("benchmark " + cfg + " -o " + (dir / "r1.csv").string() + " -j 1");
  const Outcome b = run_cli("benchmark " + cfg + " -o " + (dir / "r3.csv").string() + " -j 3");
  INFO(a.out);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "r1.csv") == slurp(dir / "r3.csv"));
  CHECK(slurp(dir / "r1_summary.csv") == slurp(dir / "r3_summary.csv"));
  CHECK(a.out.find("10 records (0 failed)") != std::string::npos);

  std::ifstream in(dir / "r1.csv");
  const auto records = read_records_csv(in, "r1.csv");
  REQUIRE(records.size() == 10);
  CHECK(records[0].experiment == "expo");
  CHECK(records[9].experiment == "paired");
  CHECK(records[9].algorithm == "fastica-init");

  const std::string summary = slurp(dir / "r1_summary.csv");
  CHECK(summary.find("paired,effica,table4,2,0,") != std::string::npos);
}

TEST_CASE("benchmark reports config errors") {
  const fs::path dir = tmp_dir();
  write_text(dir / "bad.cfg", "[experiment]\nname = a\nsources = 1\nbogus = 1\n");
  const Outcome o =
      run_cli("benchmark " + (dir / "bad.cfg").string() + " -o " + (dir / "r.csv").string());
  CHECK(o.code == 2);
  CHECK(o.out.find("bad.cfg:4: unknown key 'bogus'") != std::string::npos);
}
