#include "effica/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "effica/random.hpp"

namespace effica {

WhitenedData prewhiten(const Dataset& data) {
  if (data.cols() < 2 || data.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "prewhiten: need at least 2 samples");
  }
  WhitenedData out;
  WhiteningTransform& t = out.transform;
  t.mean = data.rowwise().mean();
  const Dataset centered = data.colwise() - t.mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(data.cols());

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 1e-12 * lambda.maxCoeff()) || !(lambda.maxCoeff() > 0.0)) {
    throw Error(ErrorKind::RankDeficient, "prewhiten: sample covariance is rank deficient");
  }
  const Eigen::MatrixXd& E = eig.eigenvectors();
  t.matrix = E * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * E.transpose();
  t.inverse = E * lambda.cwiseSqrt().asDiagonal() * E.transpose();
  out.data = t.matrix * centered;
  return out;
}

Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& B) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B * B.transpose());
  const Eigen::MatrixXd& E = eig.eigenvectors();
  return E * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * E.transpose() * B;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd G(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) G(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (R(k, k) < 0.0) Q.col(k) *= -1.0;
  }
  return Q;
}

double logcosh_contrast(const Dataset& white_data, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd Y = B * white_data;
  double total = 0.0;
  for (Eigen::Index k = 0; k < Y.rows(); ++k) {
    // log cosh(y) = |y| + log1p(exp(-2|y|)) - log 2, stable for large |y|.
    const double mean = Y.row(k)
                            .unaryExpr([](double y) {
                              const double a = std::abs(y);
                              return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
                            })
                            .mean();
    total += std::abs(mean - kGaussianLogCosh);
  }
  return total;
}

FastIcaResult fastica_from(const Dataset& white_data, const Eigen::MatrixXd& B_init, double tol,
                           int max_iters) {
  const double inv_n = 1.0 / static_cast<double>(white_data.cols());
  FastIcaResult res;
  Eigen::MatrixXd B = symmetric_orthogonalize(B_init);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd G = (B * white_data).array().tanh().matrix();
    const Eigen::VectorXd slope = (1.0 - G.array().square()).rowwise().mean();
    Eigen::MatrixXd B_new = G * white_data.transpose() * inv_n;
    B_new -= slope.asDiagonal() * B;
    B_new = symmetric_orthogonalize(B_new);
    const double agreement = (B_new * B.transpose()).diagonal().cwiseAbs().minCoeff();
    B = std::move(B_new);
    res.iterations = it + 1;
    if (agreement > 1.0 - tol) {
      res.converged = true;
      break;
    }
  }
  res.B = B;
  res.contrast = logcosh_contrast(white_data, B);
  return res;
}

FastIcaResult fastica_symmetric(const Dataset& white_data, const FastIcaOptions& options) {
  if (options.restarts < 1 || options.max_iters < 1) {
    throw Error(ErrorKind::InvalidArgument, "fastica: restarts and max_iters must be >= 1");
  }
  const Eigen::Index m = white_data.rows();
  FastIcaResult best;
  bool have_best = false;
  for (int r = 0; r < options.restarts; ++r) {
    const Eigen::MatrixXd start =
        random_orthogonal(m, derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    FastIcaResult res = fastica_from(white_data, start, options.tol, options.max_iters);
    res.restart = r;
    // Converged starts beat unconverged ones; then larger contrast wins.
    const bool better = !have_best || (res.converged && !best.converged) ||
                        (res.converged == best.converged && res.contrast > best.contrast);
    if (better) {
      best = std::move(res);
      have_best = true;
    }
  }
  return best;
}

double lower_abs_median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "median of empty sample");
  std::vector<double> a(values.size());
  std::transform(values.begin(), values.end(), a.begin(), [](double v) { return std::abs(v); });
  const std::size_t k = (a.size() + 1) / 2 - 1;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
  return a[k];
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& W, const Dataset& data) {
  Eigen::MatrixXd out = W;
  for (Eigen::Index k = 0; k < W.rows(); ++k) {
    if (W.row(k).isZero(0.0)) {
      throw Error(ErrorKind::DegenerateSample, "normalize_rows: zero row");
    }
    const Eigen::RowVectorXd s = W.row(k) * data;
    const double med = lower_abs_median({s.data(), static_cast<std::size_t>(s.size())});
    if (!(med > 0.0)) {
      throw Error(ErrorKind::DegenerateSample, "normalize_rows: zero absolute median");
    }
    Eigen::Index arg;
    W.row(k).cwiseAbs().maxCoeff(&arg);
    const double sign = W(k, arg) < 0.0 ? -1.0 : 1.0;
    out.row(k) *= sign / med;
  }
  return out;
}

Eigen::MatrixXd compose_initial(const Eigen::MatrixXd& B, const WhiteningTransform& whitening,
                                const Dataset& data) {
  return normalize_rows(B * whitening.matrix, data);
}

InitialEstimate initial_estimate(const Dataset& centered, const FastIcaOptions& options) {
  const WhitenedData white = prewhiten(centered);
  InitialEstimate out;
  out.fastica = fastica_symmetric(white.data, options);
  out.W0 = compose_initial(out.fastica.B, white.transform, centered);
  return out;
}

}  // namespace effica
