#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "effica/splines.hpp"

namespace effica {

using Basis = BSplineBasis<double>;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Empirical second-moment system of a spline sieve on one sample:
/// A = mean of B B^T, D = mean of B'. A is banded with bandwidth 3.
struct GramSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd D;
};

/// Spline estimate of a density score phi = -r'/r, zero outside the basis
/// interval.
class ScoreFit {
 public:
  ScoreFit(Basis basis, Eigen::VectorXd gamma);

  const Basis& basis() const { return basis_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }

  double operator()(double t) const;

 private:
  Basis basis_;
  Eigen::VectorXd gamma_;
};

/// Order statistic q_n(p): the ceil(p n)-th smallest value for p > 0, the
/// minimum for p = 0.
double empirical_quantile(std::span<const double> sorted, double p);

/// Working interval [max(q(0), q(0.01) - d), min(q(1), q(0.99) + d)] with
/// d = c sqrt(log log n).
Interval select_interval(std::span<const double> sample, double c = 5.0);

GramSystem build_gram(std::span<const double> sample, const Basis& basis);

/// 1e-10 trace(A) / num_basis scaled by `relative`.
double default_ridge(const GramSystem& gram, double relative = 1e-10);

/// Solves (A + ridge I) gamma = D.
ScoreFit fit_score(const GramSystem& gram, const Basis& basis, double ridge);

inline double eval_score(const ScoreFit& fit, double t) { return fit(t); }

/// Held-out least-squares criterion gamma^T A gamma - 2 gamma^T D, i.e. the
/// mean squared score error up to the constant E[phi^2].
double score_criterion(const GramSystem& held_out, const Eigen::VectorXd& gamma);

/// {2, ..., min(30, floor(2 n^{1/6}) + 8)}.
std::vector<int> default_knot_grid(std::size_t n);

/// Largest grid value up to which `criteria` strictly decreases (by more than
/// 1e-12 per step). Non-finite entries count as an increase; leading
/// non-finite entries are skipped. Throws CvFailure if none is finite.
int pick_knot_count(std::span<const double> criteria, std::span<const int> grid);

/// Averaged two-fold criterion for each grid entry (non-finite where a fold's
/// system was singular).
std::vector<double> cross_validation_curve(std::span<const double> sample, Interval interval,
                                           std::span<const int> grid, std::uint64_t rng_seed,
                                           double relative_ridge = 1e-10);

int cross_validate_knots(std::span<const double> sample, Interval interval,
                         std::span<const int> grid, std::uint64_t rng_seed,
                         double relative_ridge = 1e-10);

}  // namespace effica
