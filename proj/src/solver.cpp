#include "effica/solver.hpp"

#include <optional>
#include <string>

#include <Eigen/Cholesky>

#include "effica/random.hpp"

namespace effica {

void SolverConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be >= 1");
  if (!(step_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "step_tol must be positive");
  if (!(ridge >= 0.0)) throw Error(ErrorKind::InvalidArgument, "ridge must be >= 0");
  if (!(score_c > 0.0)) throw Error(ErrorKind::InvalidArgument, "score_c must be positive");
  if (max_step_halvings < 0) {
    throw Error(ErrorKind::InvalidArgument, "max_step_halvings must be >= 0");
  }
}

CenteredData center_data(const Dataset& data) {
  if (data.cols() < 2) throw Error(ErrorKind::InvalidArgument, "center_data: need n >= 2");
  CenteredData out;
  out.mean = data.rowwise().mean();
  out.data = data.colwise() - out.mean;
  return out;
}

namespace {

std::vector<double> row_samples(const Dataset& data, const Eigen::MatrixXd& W, Eigen::Index k) {
  const Eigen::RowVectorXd s = W.row(k) * data;
  return {s.data(), s.data() + s.size()};
}

}  // namespace

KnotPlan fix_knots(const Dataset& data, const Eigen::MatrixXd& W0, const SolverConfig& config) {
  const Eigen::Index m = W0.rows();
  if (W0.cols() != m || data.rows() != m) {
    throw Error(ErrorKind::InvalidArgument, "fix_knots: dimension mismatch");
  }
  inverse_transpose(W0);  // invertibility check
  KnotPlan plan;
  const auto grid = default_knot_grid(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto sample = row_samples(data, W0, k);
    const Interval interval = select_interval(sample, config.score_c);
    const int count = cross_validate_knots(
        sample, interval, grid, derive_seed(config.cv_seed, static_cast<std::uint64_t>(k)),
        config.ridge);
    plan.bases.emplace_back(interval.lower, interval.upper, count);
    plan.counts.push_back(count);
  }
  return plan;
}

Evaluation evaluate(const Dataset& data, const Eigen::MatrixXd& W, const KnotPlan& plan,
                    const SolverConfig& config) {
  const Eigen::Index m = W.rows();
  if (static_cast<Eigen::Index>(plan.bases.size()) != m) {
    throw Error(ErrorKind::InvalidArgument, "evaluate: knot plan does not match dimension");
  }
  Evaluation ev;
  ev.W = W;
  const Eigen::MatrixXd sources = W * data;
  ev.fits.reserve(m);
  ev.coeffs.reserve(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::RowVectorXd row = sources.row(k);
    const std::span<const double> sample(row.data(), static_cast<std::size_t>(row.size()));
    const GramSystem gram = build_gram(sample, plan.bases[k]);
    ev.fits.push_back(fit_score(gram, plan.bases[k], default_ridge(gram, config.ridge)));
    ev.coeffs.push_back(diag_coeffs(sample, ev.fits.back()));
  }
  ev.terms = score_equation_terms<ScoreFit>(data, W, ev.fits, ev.coeffs);
  ev.residual = ev.terms.e_n.norm();
  return ev;
}

Eigen::MatrixXd newton_direction(const ScoreEquationTerms& terms, Eigen::Index m) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(terms.Sigma_n);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-14 * pivots.maxCoeff()) ||
      !(ldlt.rcond() > 1e-14)) {
    throw Error(ErrorKind::SingularInformation, "empirical information matrix is singular");
  }
  const Eigen::VectorXd step = ldlt.solve(terms.e_n);
  if (!step.allFinite()) {
    throw Error(ErrorKind::SingularInformation, "Newton step is not finite");
  }
  return unvec(step, m);
}

StepResult damped_step(const Dataset& data, const Evaluation& current, const KnotPlan& plan,
                       const SolverConfig& config) {
  const Eigen::Index m = current.W.rows();
  const Eigen::MatrixXd direction = newton_direction(current.terms, m);

  std::optional<StepResult> fallback;
  double scale = 1.0;
  for (int h = 0; h <= config.max_step_halvings; ++h, scale *= 0.5) {
    Evaluation trial;
    try {
      trial = evaluate(data, current.W + scale * direction, plan, config);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidArgument) throw;
      continue;  // inadmissible trial point; shrink
    }
    if (trial.residual <= current.residual) {
      return StepResult{std::move(trial), direction, h, true};
    }
    fallback = StepResult{std::move(trial), direction, h, false};
  }
  if (!fallback) {
    throw Error(ErrorKind::SingularMatrix, "every trial step produced a singular system");
  }
  return std::move(*fallback);
}

IterateResult effica_iterate(const Dataset& data, const Eigen::MatrixXd& W_current,
                             const KnotPlan& plan, const SolverConfig& config) {
  config.validate();
  const Evaluation current = evaluate(data, W_current, plan, config);
  StepResult step = damped_step(data, current, plan, config);
  return {std::move(step.next.W), current.terms};
}

UnmixingEstimate run_with_plan(const Dataset& centered, const Eigen::MatrixXd& W0,
                               const KnotPlan& plan, const SolverConfig& config) {
  config.validate();
  const Eigen::Index m = W0.rows();
  if (W0.cols() != m || centered.rows() != m) {
    throw Error(ErrorKind::InvalidArgument, "run: W0 must be m x m with m = data rows");
  }
  if (centered.cols() < 10 * m) {
    throw Error(ErrorKind::InvalidArgument,
                "run: need at least 10 m samples, got " + std::to_string(centered.cols()));
  }

  UnmixingEstimate est;
  est.plan = plan;
  est.mean = Eigen::VectorXd::Zero(m);
  Evaluation current = evaluate(centered, W0, plan, config);
  for (int it = 0; it < config.max_iters; ++it) {
    StepResult step = damped_step(centered, current, plan, config);
    IterationTrace tr;
    tr.residual_before = current.residual;
    tr.residual_after = step.next.residual;
    tr.step_norm = (step.next.W - current.W).norm();
    tr.halvings = step.halvings;
    tr.improved = step.improved;
    est.trace.push_back(tr);
    current = std::move(step.next);
    est.iterations = it + 1;
    if (tr.step_norm <= config.step_tol) {
      est.converged = true;
      break;
    }
  }
  est.W_hat = current.W;
  est.final_residual = current.residual;
  est.fits = std::move(current.fits);
  est.coeffs = std::move(current.coeffs);
  return est;
}

UnmixingEstimate run(const Dataset& data, const Eigen::MatrixXd& W0, const SolverConfig& config) {
  config.validate();
  CenteredData centered = center_data(data);
  const KnotPlan plan = fix_knots(centered.data, W0, config);
  UnmixingEstimate est = run_with_plan(centered.data, W0, plan, config);
  est.mean = std::move(centered.mean);
  return est;
}

}  // namespace effica
