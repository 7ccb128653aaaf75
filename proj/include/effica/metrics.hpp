#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "effica/error.hpp"

namespace effica {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <typename Derived>
Mat<typename Derived::Scalar> checked_inverse(const Eigen::MatrixBase<Derived>& W) {
  using Scalar = typename Derived::Scalar;
  if (W.rows() != W.cols() || W.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "metric: matrices must be square");
  }
  const Eigen::PartialPivLU<Mat<Scalar>> lu(W.eval());
  if (!(lu.rcond() >= Scalar(1e-12))) {
    throw Error(ErrorKind::SingularMatrix, "metric: singular matrix");
  }
  return lu.inverse();
}

template <typename Derived>
Mat<typename Derived::Scalar> unit_rows(const Eigen::MatrixBase<Derived>& V) {
  Mat<typename Derived::Scalar> out = V;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto norm = out.row(i).norm();
    if (!(norm > 0)) throw Error(ErrorKind::SingularMatrix, "metric: zero row");
    out.row(i) /= norm;
  }
  return out;
}

}  // namespace detail

/// Maximum-weight perfect matching on a square weight matrix (Hungarian
/// method, O(m^3)). Returns row_of[col]: the row assigned to each column.
template <typename Scalar>
std::vector<Eigen::Index> max_weight_assignment(const Mat<Scalar>& weight) {
  const Eigen::Index m = weight.rows();
  // Shortest augmenting path form on costs -weight; 1-based potentials.
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> u(m + 1, Scalar(0)), v(m + 1, Scalar(0));
  std::vector<Eigen::Index> p(m + 1, 0), way(m + 1, 0);
  for (Eigen::Index i = 1; i <= m; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<Scalar> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = p[j0];
      Scalar delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const Scalar cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Eigen::Index> row_of(m);
  for (Eigen::Index j = 1; j <= m; ++j) row_of[j - 1] = p[j] - 1;
  return row_of;
}

/// Amari error between two unmixing matrices after rescaling both to unit
/// rows; a = V W^{-1}. Lies in [0, m-1] and vanishes iff V and W agree up to
/// row permutation and scaling.
template <typename DerivedV, typename DerivedW>
typename DerivedV::Scalar amari_error(const Eigen::MatrixBase<DerivedV>& V,
                                      const Eigen::MatrixBase<DerivedW>& W) {
  using Scalar = typename DerivedV::Scalar;
  if (V.rows() != W.rows() || V.cols() != W.cols()) {
    throw Error(ErrorKind::InvalidArgument, "amari_error: shape mismatch");
  }
  detail::checked_inverse(V);
  const Mat<Scalar> a =
      (detail::unit_rows(V) * detail::checked_inverse(detail::unit_rows(W))).cwiseAbs();
  const Eigen::Index m = a.rows();
  Scalar rows = 0, cols = 0;
  for (Eigen::Index i = 0; i < m; ++i) rows += a.row(i).sum() / a.row(i).maxCoeff() - Scalar(1);
  for (Eigen::Index j = 0; j < m; ++j) cols += a.col(j).sum() / a.col(j).maxCoeff() - Scalar(1);
  return (rows + cols) / (Scalar(2) * Scalar(m));
}

template <typename Scalar = double>
struct MetricsReport {
  Scalar amari = 0;
  Scalar frobenius = 0;
  std::vector<Eigen::Index> permutation;  // row of V W^{-1} aligned to each target row
  std::vector<Scalar> signs_scales;       // scale applied to that row
};

/// ||V' W^{-1} - I||_F minimized over row permutations and per-row scales of
/// V. For a fixed assignment the best scale of row g against e_k is
/// g_k / ||g||^2 with residual 1 - g_k^2 / ||g||^2, so the optimal
/// permutation maximizes sum_k G_{pi(k),k}^2 / ||G_{pi(k)}||^2.
template <typename DerivedV, typename DerivedW>
MetricsReport<typename DerivedV::Scalar> frobenius_error(const Eigen::MatrixBase<DerivedV>& V,
                                                         const Eigen::MatrixBase<DerivedW>& W) {
  using Scalar = typename DerivedV::Scalar;
  if (V.rows() != W.rows() || V.cols() != W.cols()) {
    throw Error(ErrorKind::InvalidArgument, "frobenius_error: shape mismatch");
  }
  detail::checked_inverse(V);
  const Mat<Scalar> G = V * detail::checked_inverse(W);
  const Eigen::Index m = G.rows();
  Mat<Scalar> weight(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar norm2 = G.row(i).squaredNorm();
    if (!(norm2 > 0)) throw Error(ErrorKind::DegenerateAlignment, "frobenius_error: zero row");
    weight.row(i) = G.row(i).array().square() / norm2;
  }

  MetricsReport<Scalar> report;
  report.permutation = max_weight_assignment<Scalar>(weight);
  Mat<Scalar> aligned(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto g = G.row(report.permutation[k]);
    const Scalar norm2 = g.squaredNorm();
    const Scalar c = g(k) / norm2;
    report.signs_scales.push_back(c);
    aligned.row(k) = c * g;
  }
  report.frobenius = (aligned - Mat<Scalar>::Identity(m, m)).norm();
  report.amari = amari_error(V, W);
  return report;
}

struct Summary {
  double mean_amari = 0.0;
  double sqrt_mse = 0.0;
};

/// Mean Amari error and sqrt(mean(d_F^2)). Reporting scales (x1000, x10) are
/// applied by callers.
Summary summarize(std::span<const double> frob_errors, std::span<const double> amari_errors);

}  // namespace effica
