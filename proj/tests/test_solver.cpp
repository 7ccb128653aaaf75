#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "effica/bench.hpp"
#include "effica/metrics.hpp"
#include "effica/random.hpp"

using namespace effica;

namespace {

ExperimentSpec row_one(Eigen::Index n, std::uint64_t seed) {
  ExperimentSpec s;
  s.name = "row1";
  s.m = 2;
  s.n = n;
  s.sources = expand_case(1, 2);
  s.W_true = mixing_preset("table3", 2);
  s.seed = seed;
  s.replications = 1;
  return s;
}

ExperimentSpec logistic_pair(Eigen::Index n, std::uint64_t seed) {
  ExperimentSpec s = row_one(n, seed);
  s.name = "logistic";
  s.sources = expand_case(5, 2);
  return s;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("centering") {
  Eigen::MatrixXd X(2, 4);
  X << 1, 2, 3, 4, 5, 5, 5, 5;
  const CenteredData c = center_data(X);
  CHECK(c.mean[0] == doctest::Approx(2.5));
  CHECK(c.mean[1] == 5.0);
  CHECK(c.data.row(1).isZero(0));
  CHECK(c.data.rowwise().mean().cwiseAbs().maxCoeff() < 1e-15);
  const CenteredData again = center_data(c.data);
  CHECK((again.data - c.data).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(center_data(Eigen::MatrixXd(2, 1)), Error);
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.step_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.max_step_halvings = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_NOTHROW(SolverConfig{}.validate());
}

TEST_CASE("knots are fixed deterministically from W0") {
  const auto d = make_dataset(row_one(1000, 5), 0);
  const CenteredData c = center_data(d.X);
  const InitialEstimate init = initial_estimate(c.data, {});
  SolverConfig cfg;
  cfg.cv_seed = 31;
  const KnotPlan a = fix_knots(c.data, init.W0, cfg);
  const KnotPlan b = fix_knots(c.data, init.W0, cfg);
  REQUIRE(a.bases.size() == 2);
  CHECK(a.counts == b.counts);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a.bases[k].lower() == b.bases[k].lower());
    CHECK(a.bases[k].upper() == b.bases[k].upper());
    CHECK(a.bases[k].num_basis() == a.counts[k]);
    const Eigen::RowVectorXd s = init.W0.row(k) * c.data;
    const auto inside = (s.array() >= a.bases[k].lower() && s.array() <= a.bases[k].upper()).count();
    CHECK(double(inside) >= 0.98 * double(s.size()));
  }
}

TEST_CASE("Newton update equals an independent solve") {
  const auto d = make_dataset(logistic_pair(2000, 6), 0);
  const CenteredData c = center_data(d.X);
  const Eigen::MatrixXd W0 = normalize_rows(d.W_true, c.data);
  SolverConfig cfg;
  cfg.max_step_halvings = 0;  // full step always
  const KnotPlan plan = fix_knots(c.data, W0, cfg);
  const Evaluation ev = evaluate(c.data, W0, plan, cfg);
  const Eigen::VectorXd d_ref = ev.terms.Sigma_n.fullPivLu().solve(ev.terms.e_n);
  Eigen::MatrixXd D_ref(2, 2);
  D_ref << d_ref[0], d_ref[2], d_ref[1], d_ref[3];  // column stacking by hand
  CHECK((newton_direction(ev.terms, 2) - D_ref).cwiseAbs().maxCoeff() < 1e-10);
  const IterateResult it = effica_iterate(c.data, W0, plan, cfg);
  CHECK((it.W_next - (W0 + D_ref)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((it.terms.e_n - ev.terms.e_n).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero residual is a fixed point of the update") {
  ScoreEquationTerms t;
  t.e_n = Eigen::VectorXd::Zero(4);
  t.Sigma_n = Eigen::MatrixXd::Identity(4, 4) * 3.0;
  CHECK(newton_direction(t, 2).isZero(0));
  t.Sigma_n = Eigen::MatrixXd::Zero(4, 4);
  try {
    newton_direction(t, 2);
    FAIL("expected singular-information");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularInformation);
  }
}

TEST_CASE("a root of the score equation is a fixed point") {
  // Each source takes symmetric values with exactly half inside [-1, 1], and
  // the sample is their full cross product. Then mean s_j = 0, mean kappa = 0
  // and off-diagonal means factor, so e_n vanishes at the true W.
  std::vector<double> levels;
  for (int i = 0; i < 10; ++i) {
    for (const double sign : {-1.0, 1.0}) {
      levels.push_back(sign * (0.05 + 0.1 * i));
      levels.push_back(sign * (1.2 + 0.3 * i));
    }
  }
  const auto L = Eigen::Index(levels.size());
  Eigen::MatrixXd S(2, L * L);
  for (Eigen::Index p = 0; p < L; ++p)
    for (Eigen::Index q = 0; q < L; ++q) S.col(p * L + q) << levels[p], levels[q];
  const Eigen::MatrixXd W = mixing_preset("table3", 2);
  const Eigen::MatrixXd X = W.fullPivLu().solve(S);
  const CenteredData c = center_data(X);
  const SolverConfig cfg;
  const KnotPlan plan = fix_knots(c.data, W, cfg);
  REQUIRE(evaluate(c.data, W, plan, cfg).residual < 1e-12);
  const UnmixingEstimate est = run_with_plan(c.data, W, plan, cfg);
  CHECK(est.iterations == 1);
  CHECK(est.converged);
  CHECK((est.W_hat - W).norm() <= cfg.step_tol);
}

TEST_CASE("one undamped step from a perturbed truth reduces the residual") {
  std::vector<double> ratio;
  for (int rep = 0; rep < 9; ++rep) {
    const auto d = make_dataset(logistic_pair(4000, 77), rep);
    const CenteredData c = center_data(d.X);
    Rng rng(derive_seed(99, rep));
    Eigen::MatrixXd E(2, 2);
    for (int i = 0; i < 4; ++i) E(i % 2, i / 2) = 0.05 * rng.normal();
    const Eigen::MatrixXd W0 = normalize_rows(d.W_true + E, c.data);
    SolverConfig cfg;
    cfg.max_step_halvings = 0;
    cfg.cv_seed = rep;
    const KnotPlan plan = fix_knots(c.data, W0, cfg);
    const Evaluation before = evaluate(c.data, W0, plan, cfg);
    const IterateResult it = effica_iterate(c.data, W0, plan, cfg);
    const Evaluation after = evaluate(c.data, it.W_next, plan, cfg);
    ratio.push_back(after.residual / before.residual);
  }
  CHECK(median(ratio) < 1.0);
}

TEST_CASE("iteration count, determinism, and monotone accepted residuals") {
  const auto d = make_dataset(row_one(600, 12), 0);
  const CenteredData c = center_data(d.X);
  const InitialEstimate init = initial_estimate(c.data, {});
  SolverConfig cfg;
  cfg.max_iters = 1;
  const UnmixingEstimate one = run(d.X, init.W0, cfg);
  CHECK(one.iterations == 1);
  CHECK(one.trace.size() == 1);
  CHECK((one.mean - c.mean).cwiseAbs().maxCoeff() < 1e-15);

  cfg.max_iters = 30;
  const UnmixingEstimate a = run(d.X, init.W0, cfg);
  const UnmixingEstimate b = run(d.X, init.W0, cfg);
  CHECK(a.W_hat == b.W_hat);
  CHECK(a.iterations == b.iterations);
  CHECK(a.iterations <= 30);
  for (const auto& tr : a.trace) {
    if (tr.improved) CHECK(tr.residual_after <= tr.residual_before);
  }
  if (a.converged) CHECK(a.trace.back().step_norm <= cfg.step_tol);
  CHECK(std::abs(Eigen::FullPivLU<Eigen::MatrixXd>(a.W_hat).determinant()) > 0.0);
  CHECK(a.fits.size() == 2);
  CHECK(a.coeffs.size() == 2);
}

TEST_CASE("run preconditions") {
  const auto d = make_dataset(row_one(15, 1), 0);
  CHECK_THROWS_AS(run(d.X, Eigen::MatrixXd::Identity(2, 2), SolverConfig{}), Error);
  Eigen::MatrixXd X = make_dataset(row_one(200, 1), 0).X;
  CHECK_THROWS_AS(run(X, Eigen::MatrixXd::Identity(3, 3), SolverConfig{}), Error);
  SolverConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(run(X, Eigen::MatrixXd::Identity(2, 2), bad), Error);
}

TEST_CASE("row permutation and scaling of the truth leave accuracy unchanged") {
  // The Frobenius error sees V W^{-1}, which is unchanged when both the data
  // and the truth are transformed, so any PD works there. The Amari error
  // normalizes rows first and is only comparable when |D| is constant.
  Eigen::MatrixXd general(2, 2), balanced(2, 2);
  general << 0, -3, 0.5, 0;
  balanced << 0, -2, 2, 0;
  std::vector<double> frob_plain, frob_general, amari_plain, amari_balanced;
  for (int rep = 0; rep < 20; ++rep) {
    const ExperimentSpec s = logistic_pair(1000, 1234);
    const auto opts = replication_options(SolverConfig{}, replication_seed(1234, rep));
    const auto d = make_dataset(s, rep);
    const Eigen::MatrixXd W = separate(d.X, opts).estimate.W_hat;
    frob_plain.push_back(frobenius_error(W, d.W_true).frobenius);
    amari_plain.push_back(amari_error(W, d.W_true));

    ExperimentSpec g = s;
    g.W_true = general * s.W_true;
    const auto dg = make_dataset(g, rep);
    frob_general.push_back(frobenius_error(separate(dg.X, opts).estimate.W_hat, dg.W_true).frobenius);

    ExperimentSpec b = s;
    b.W_true = balanced * s.W_true;
    const auto db = make_dataset(b, rep);
    amari_balanced.push_back(amari_error(separate(db.X, opts).estimate.W_hat, db.W_true));
  }
  const double f1 = median(frob_plain), f2 = median(frob_general);
  const double a1 = median(amari_plain), a2 = median(amari_balanced);
  INFO("frobenius medians " << f1 << " and " << f2 << ", amari medians " << a1 << " and " << a2);
  CHECK(std::abs(f1 - f2) < 0.5 * std::max(f1, f2));
  CHECK(std::abs(a1 - a2) < 0.5 * std::max(a1, a2));
}
