#include "effica/score_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "effica/random.hpp"

namespace effica {

ScoreFit::ScoreFit(Basis basis, Eigen::VectorXd gamma)
    : basis_(std::move(basis)), gamma_(std::move(gamma)) {
  if (gamma_.size() != basis_.num_basis()) {
    throw Error(ErrorKind::InvalidArgument, "ScoreFit: gamma length does not match basis");
  }
  if (!gamma_.allFinite()) {
    throw Error(ErrorKind::SingularSystem, "ScoreFit: non-finite coefficients");
  }
}

double ScoreFit::operator()(double t) const {
  const auto loc = basis_.local(t);
  if (!loc.inside) return 0.0;
  double acc = 0.0;
  for (int r = 0; r < Basis::kOrder; ++r) {
    const Eigen::Index i = loc.first + r;
    if (i >= 0 && i < gamma_.size()) acc += gamma_[i] * loc.value[r];
  }
  return acc;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty sample");
  const auto n = sorted.size();
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

Interval select_interval(std::span<const double> sample, double c) {
  if (sample.size() < 20) {
    throw Error(ErrorKind::InvalidArgument, "select_interval: need at least 20 samples");
  }
  if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "select_interval: c must be positive");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() < sorted.back())) {
    throw Error(ErrorKind::DegenerateSample, "select_interval: constant sample");
  }
  const double n = static_cast<double>(sorted.size());
  const double margin = c * std::sqrt(std::log(std::log(n)));
  Interval out;
  out.lower = std::max(sorted.front(), empirical_quantile(sorted, 0.01) - margin);
  out.upper = std::min(sorted.back(), empirical_quantile(sorted, 0.99) + margin);
  return out;
}

GramSystem build_gram(std::span<const double> sample, const Basis& basis) {
  if (sample.empty()) throw Error(ErrorKind::InvalidArgument, "build_gram: empty sample");
  const Eigen::Index nb = basis.num_basis();
  GramSystem g{Eigen::MatrixXd::Zero(nb, nb), Eigen::VectorXd::Zero(nb)};
  for (const double s : sample) {
    const auto loc = basis.local(s);
    if (!loc.inside) continue;
    for (int a = 0; a < Basis::kOrder; ++a) {
      const Eigen::Index i = loc.first + a;
      if (i < 0 || i >= nb) continue;
      g.D[i] += loc.deriv[a];
      for (int b = 0; b <= a; ++b) {
        const Eigen::Index j = loc.first + b;
        if (j < 0) continue;
        g.A(i, j) += loc.value[a] * loc.value[b];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  g.A *= inv_n;
  g.D *= inv_n;
  g.A.triangularView<Eigen::StrictlyUpper>() = g.A.transpose();
  return g;
}

double default_ridge(const GramSystem& gram, double relative) {
  return relative * gram.A.trace() / static_cast<double>(gram.A.rows());
}

ScoreFit fit_score(const GramSystem& gram, const Basis& basis, double ridge) {
  if (!(ridge >= 0.0)) throw Error(ErrorKind::InvalidArgument, "fit_score: ridge must be >= 0");
  const Eigen::Index nb = basis.num_basis();
  if (gram.A.rows() != nb || gram.D.size() != nb) {
    throw Error(ErrorKind::InvalidArgument, "fit_score: system size does not match basis");
  }
  if (gram.D.isZero(0.0)) return ScoreFit(basis, Eigen::VectorXd::Zero(nb));

  Eigen::MatrixXd lhs = gram.A;
  lhs.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  // rcond() alone misses exact zero pivots, which LDLT solves through.
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-15 * pivots.maxCoeff()) ||
      !(ldlt.rcond() > 1e-15)) {
    throw Error(ErrorKind::SingularSystem, "fit_score: Gram system is numerically singular");
  }
  Eigen::VectorXd gamma = ldlt.solve(gram.D);
  // One step of refinement keeps the solve residual at roundoff level.
  gamma += ldlt.solve(gram.D - lhs * gamma);
  if (!gamma.allFinite()) {
    throw Error(ErrorKind::SingularSystem, "fit_score: non-finite solution");
  }
  return ScoreFit(basis, std::move(gamma));
}

double score_criterion(const GramSystem& held_out, const Eigen::VectorXd& gamma) {
  return gamma.dot(held_out.A * gamma) - 2.0 * gamma.dot(held_out.D);
}

std::vector<int> default_knot_grid(std::size_t n) {
  const int top = std::min(
      30, static_cast<int>(std::floor(2.0 * std::pow(static_cast<double>(n), 1.0 / 6.0))) + 8);
  std::vector<int> grid;
  for (int k = 2; k <= top; ++k) grid.push_back(k);
  return grid;
}

int pick_knot_count(std::span<const double> criteria, std::span<const int> grid) {
  if (criteria.size() != grid.size() || grid.empty()) {
    throw Error(ErrorKind::InvalidArgument, "pick_knot_count: size mismatch");
  }
  std::size_t k = 0;
  while (k < criteria.size() && !std::isfinite(criteria[k])) ++k;
  if (k == criteria.size()) {
    throw Error(ErrorKind::CvFailure, "cross-validation: every candidate fit was singular");
  }
  std::size_t best = k;
  for (std::size_t j = k + 1; j < criteria.size(); ++j) {
    if (!std::isfinite(criteria[j]) || !(criteria[j] < criteria[j - 1] - 1e-12)) break;
    best = j;
  }
  return grid[best];
}

namespace {

double fold_criterion(std::span<const double> train, std::span<const double> test,
                      const Basis& basis, double relative_ridge) {
  const GramSystem fit_gram = build_gram(train, basis);
  const ScoreFit fit = fit_score(fit_gram, basis, default_ridge(fit_gram, relative_ridge));
  return score_criterion(build_gram(test, basis), fit.gamma());
}

}  // namespace

std::vector<double> cross_validation_curve(std::span<const double> sample, Interval interval,
                                           std::span<const int> grid, std::uint64_t rng_seed,
                                           double relative_ridge) {
  if (sample.size() < 40) {
    throw Error(ErrorKind::InvalidArgument, "cross_validate_knots: need at least 40 samples");
  }
  if (grid.empty() || grid.front() < 1 ||
      std::adjacent_find(grid.begin(), grid.end(), std::greater_equal<int>{}) != grid.end()) {
    throw Error(ErrorKind::InvalidArgument,
                "cross_validate_knots: grid must be strictly increasing and start at >= 1");
  }

  Rng rng(rng_seed);
  const auto perm = rng.permutation(sample.size());
  const std::size_t first_size = (sample.size() + 1) / 2;
  std::vector<double> half1, half2;
  half1.reserve(first_size);
  half2.reserve(sample.size() - first_size);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < first_size ? half1 : half2).push_back(sample[perm[i]]);
  }

  std::vector<double> curve;
  curve.reserve(grid.size());
  for (const int count : grid) {
    double value = std::numeric_limits<double>::infinity();
    try {
      const Basis basis(interval.lower, interval.upper, count);
      value = 0.5 * (fold_criterion(half1, half2, basis, relative_ridge) +
                     fold_criterion(half2, half1, basis, relative_ridge));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularSystem) throw;
    }
    curve.push_back(value);
  }
  return curve;
}

int cross_validate_knots(std::span<const double> sample, Interval interval,
                         std::span<const int> grid, std::uint64_t rng_seed,
                         double relative_ridge) {
  const auto curve = cross_validation_curve(sample, interval, grid, rng_seed, relative_ridge);
  return pick_knot_count(curve, grid);
}

}  // namespace effica
