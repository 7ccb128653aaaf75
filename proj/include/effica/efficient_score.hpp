#pragma once

#include <concepts>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "effica/error.hpp"

namespace effica {

/// Anything that maps a source value to a density-score value: a ScoreFit,
/// an analytic score, a std::function.
template <typename F>
concept ScoreFunction = std::invocable<const F&, double> &&
                        std::convertible_to<std::invoke_result_t<const F&, double>, double>;

using AnalyticScore = std::function<double(double)>;

/// kappa(s) = 2 I(|s| <= 1) - 1. The scale constraint med|S| = 1 is
/// equivalent to E[kappa(S)] = 0.
template <typename Scalar>
constexpr Scalar kappa(Scalar s) {
  return (s <= Scalar(1) && s >= Scalar(-1)) ? Scalar(1) : Scalar(-1);
}

/// psi(s) = 2 s I(|s| <= 1).
template <typename Scalar>
constexpr Scalar psi(Scalar s) {
  return (s <= Scalar(1) && s >= Scalar(-1)) ? Scalar(2) * s : Scalar(0);
}

/// Per-channel plug-in scalars for the diagonal of M:
///   alpha = -(1 - u) v / (sigma2 - v^2),  beta = (1 - u) sigma2 / (sigma2 - v^2)
/// with sigma2 = E[s^2], v = E[psi(s)], u = E[phi(s) psi(s)].
struct DiagCoeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// Builds the closed forms from the three moments. Throws
/// IllConditionedScale when sigma2 - v^2 <= 1e-8 sigma2.
DiagCoeffs make_diag_coeffs(double sigma2, double u, double v);

template <ScoreFunction F>
DiagCoeffs diag_coeffs(std::span<const double> channel_sample, const F& phi) {
  if (channel_sample.empty()) {
    throw Error(ErrorKind::InvalidArgument, "diag_coeffs: empty sample");
  }
  double sigma2 = 0.0, u = 0.0, v = 0.0;
  for (const double s : channel_sample) {
    const double p = psi(s);
    sigma2 += s * s;
    v += p;
    if (p != 0.0) u += static_cast<double>(phi(s)) * p;
  }
  const double inv_n = 1.0 / static_cast<double>(channel_sample.size());
  return make_diag_coeffs(sigma2 * inv_n, u * inv_n, v * inv_n);
}

/// M_ij(s) = -phi_i(s_i) s_j off the diagonal, M_ii(s) = alpha_i s_i + beta_i kappa(s_i).
template <ScoreFunction F>
Eigen::MatrixXd build_M(const Eigen::Ref<const Eigen::VectorXd>& s, std::span<const F> fits,
                        std::span<const DiagCoeffs> coeffs) {
  const Eigen::Index m = s.size();
  if (static_cast<Eigen::Index>(fits.size()) != m ||
      static_cast<Eigen::Index>(coeffs.size()) != m) {
    throw Error(ErrorKind::InvalidArgument, "build_M: dimension mismatch");
  }
  Eigen::MatrixXd M(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double phi_i = static_cast<double>(fits[i](s[i]));
    for (Eigen::Index j = 0; j < m; ++j) M(i, j) = -phi_i * s[j];
    M(i, i) = coeffs[i].alpha * s[i] + coeffs[i].beta * kappa(s[i]);
  }
  return M;
}

/// W^{-T} from an LU factorization with partial pivoting. Throws
/// SingularMatrix when the reciprocal condition estimate is below 1e-12.
Eigen::MatrixXd inverse_transpose(const Eigen::MatrixXd& W);

/// Column-stacking vec(A) = (a_1^T, ..., a_k^T)^T over the columns a_i.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& A) {
  return Eigen::Map<const Eigen::VectorXd>(A.data(), A.size());
}

/// Inverse of vec for a square m x m matrix.
inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index m) {
  if (v.size() != m * m) throw Error(ErrorKind::InvalidArgument, "unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, m);
}

/// l*(x, W) = vec(M(W x) W^{-T}).
template <ScoreFunction F>
Eigen::VectorXd efficient_score_at(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::MatrixXd& W, std::span<const F> fits,
                                   std::span<const DiagCoeffs> coeffs) {
  const Eigen::MatrixXd w_inv_t = inverse_transpose(W);
  const Eigen::VectorXd s = W * x;
  return vec(build_M<F>(s, fits, coeffs) * w_inv_t);
}

/// Empirical mean e_n and mean outer product Sigma_n of the efficient score
/// over the columns of a dataset.
struct ScoreEquationTerms {
  Eigen::VectorXd e_n;
  Eigen::MatrixXd Sigma_n;
};

/// Scores for every column, one column of the result per sample.
template <ScoreFunction F>
Eigen::MatrixXd efficient_scores(const Eigen::MatrixXd& data, const Eigen::MatrixXd& W,
                                 std::span<const F> fits, std::span<const DiagCoeffs> coeffs) {
  const Eigen::Index m = W.rows();
  if (W.cols() != m || data.rows() != m) {
    throw Error(ErrorKind::InvalidArgument, "efficient_scores: dimension mismatch");
  }
  const Eigen::MatrixXd w_inv_t = inverse_transpose(W);
  const Eigen::MatrixXd sources = W * data;
  Eigen::MatrixXd scores(m * m, data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const Eigen::MatrixXd l = build_M<F>(sources.col(c), fits, coeffs) * w_inv_t;
    scores.col(c) = Eigen::Map<const Eigen::VectorXd>(l.data(), m * m);
  }
  return scores;
}

/// Sums run sequentially over samples so the result is bit-reproducible.
ScoreEquationTerms summarize_scores(const Eigen::MatrixXd& scores);

template <ScoreFunction F>
ScoreEquationTerms score_equation_terms(const Eigen::MatrixXd& data, const Eigen::MatrixXd& W,
                                        std::span<const F> fits,
                                        std::span<const DiagCoeffs> coeffs) {
  if (data.cols() < 1) throw Error(ErrorKind::InvalidArgument, "score_equation_terms: no samples");
  return summarize_scores(efficient_scores<F>(data, W, fits, coeffs));
}

}  // namespace effica
