#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "effica/efficient_score.hpp"
#include "effica/score_estimator.hpp"

namespace effica {

/// m x n matrix of observations, one column per sample.
using Dataset = Eigen::MatrixXd;

struct SolverConfig {
  int max_iters = 100;
  /// Frobenius norm of the update below which the iteration stops.
  double step_tol = 1e-8;
  std::uint64_t cv_seed = 0;
  /// Ridge relative to trace(A) / num_basis for every score fit.
  double ridge = 1e-10;
  /// Boundary constant c of the working-interval rule.
  double score_c = 5.0;
  int max_step_halvings = 10;

  void validate() const;
};

struct CenteredData {
  Dataset data;
  Eigen::VectorXd mean;
};

CenteredData center_data(const Dataset& data);

/// Per-channel spline bases frozen from the initial estimate.
struct KnotPlan {
  std::vector<Basis> bases;
  std::vector<int> counts;
};

KnotPlan fix_knots(const Dataset& data, const Eigen::MatrixXd& W0, const SolverConfig& config);

/// Everything computed from one unmixing matrix: refit scores on the frozen
/// bases, plug-in coefficients, and the score-equation terms.
struct Evaluation {
  Eigen::MatrixXd W;
  std::vector<ScoreFit> fits;
  std::vector<DiagCoeffs> coeffs;
  ScoreEquationTerms terms;
  double residual = 0.0;  // ||e_n||_2
};

Evaluation evaluate(const Dataset& data, const Eigen::MatrixXd& W, const KnotPlan& plan,
                    const SolverConfig& config);

/// Newton direction: vec(d) solving Sigma_n vec(d) = e_n, reshaped to m x m.
/// Throws SingularInformation when Sigma_n cannot be factored.
Eigen::MatrixXd newton_direction(const ScoreEquationTerms& terms, Eigen::Index m);

struct StepResult {
  Evaluation next;
  Eigen::MatrixXd direction;
  int halvings = 0;
  /// False when no trial step kept ||e_n|| from increasing and the smallest
  /// admissible step was taken instead.
  bool improved = true;
};

/// One damped step from an already evaluated point.
StepResult damped_step(const Dataset& data, const Evaluation& current, const KnotPlan& plan,
                       const SolverConfig& config);

struct IterateResult {
  Eigen::MatrixXd W_next;
  ScoreEquationTerms terms;  // at W_current
};

IterateResult effica_iterate(const Dataset& data, const Eigen::MatrixXd& W_current,
                             const KnotPlan& plan, const SolverConfig& config);

struct IterationTrace {
  double residual_before = 0.0;
  double residual_after = 0.0;
  double step_norm = 0.0;
  int halvings = 0;
  bool improved = true;
};

struct UnmixingEstimate {
  Eigen::MatrixXd W_hat;
  Eigen::VectorXd mean;
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
  std::vector<ScoreFit> fits;
  std::vector<DiagCoeffs> coeffs;
  KnotPlan plan;
  std::vector<IterationTrace> trace;
};

/// Centers the data, freezes knots from W0, and iterates until the update
/// norm drops to config.step_tol or max_iters is reached.
UnmixingEstimate run(const Dataset& data, const Eigen::MatrixXd& W0, const SolverConfig& config);

/// Same, with bases supplied by the caller. `data` must already be centered.
UnmixingEstimate run_with_plan(const Dataset& centered, const Eigen::MatrixXd& W0,
                               const KnotPlan& plan, const SolverConfig& config);

}  // namespace effica
