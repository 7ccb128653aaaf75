#include "effica/efficient_score.hpp"

#include <cmath>

#include <Eigen/LU>

namespace effica {

DiagCoeffs make_diag_coeffs(double sigma2, double u, double v) {
  const double denom = sigma2 - v * v;
  if (!(sigma2 > 0.0) || !(denom > 1e-8 * sigma2) || !std::isfinite(u)) {
    throw Error(ErrorKind::IllConditionedScale,
                "diag_coeffs: sigma^2 - v^2 is not safely positive (sigma^2 = " +
                    std::to_string(sigma2) + ", v = " + std::to_string(v) + ")");
  }
  DiagCoeffs c;
  c.sigma2 = sigma2;
  c.u = u;
  c.v = v;
  c.alpha = -(1.0 - u) * v / denom;
  c.beta = (1.0 - u) * sigma2 / denom;
  return c;
}

Eigen::MatrixXd inverse_transpose(const Eigen::MatrixXd& W) {
  if (W.rows() != W.cols() || W.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "inverse_transpose: matrix must be square");
  }
  if (!W.allFinite()) throw Error(ErrorKind::SingularMatrix, "unmixing matrix is not finite");
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(W);
  if (!(lu.rcond() >= 1e-12)) {
    throw Error(ErrorKind::SingularMatrix, "unmixing matrix is numerically singular");
  }
  return lu.inverse().transpose();
}

ScoreEquationTerms summarize_scores(const Eigen::MatrixXd& scores) {
  const Eigen::Index d = scores.rows();
  const Eigen::Index n = scores.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  ScoreEquationTerms t;
  t.e_n = Eigen::VectorXd::Zero(d);
  for (Eigen::Index c = 0; c < n; ++c) t.e_n += scores.col(c);
  t.e_n *= inv_n;
  t.Sigma_n = Eigen::MatrixXd::Zero(d, d);
  t.Sigma_n.selfadjointView<Eigen::Lower>().rankUpdate(scores, inv_n);
  t.Sigma_n.triangularView<Eigen::StrictlyUpper>() = t.Sigma_n.transpose();
  return t;
}

}  // namespace effica
