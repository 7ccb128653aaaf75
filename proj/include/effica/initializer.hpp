#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "effica/solver.hpp"

namespace effica {

/// Maps centered X to identity sample covariance: Z = matrix (X - mean).
struct WhiteningTransform {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd inverse;
  Eigen::VectorXd mean;
};

struct WhitenedData {
  Dataset data;
  WhiteningTransform transform;
};

/// Symmetric (eigendecomposition) whitening with the 1/n covariance. Throws
/// RankDeficient when the smallest eigenvalue is below 1e-12 times the largest.
WhitenedData prewhiten(const Dataset& data);

/// E[log cosh(g)] for g ~ N(0, 1).
inline constexpr double kGaussianLogCosh = 0.37456720749143807;

struct FastIcaOptions {
  int restarts = 3;
  double tol = 1e-6;
  int max_iters = 200;
  std::uint64_t seed = 0;
};

struct FastIcaResult {
  Eigen::MatrixXd B;  // orthogonal, rows are unmixing directions in white space
  bool converged = false;
  int iterations = 0;
  double contrast = 0.0;  // sum_k |mean log cosh(b_k z) - E log cosh(g)|
  int restart = 0;        // index of the winning start
};

/// B <- (B B^T)^{-1/2} B.
Eigen::MatrixXd symmetric_orthogonalize(const Eigen::MatrixXd& B);

/// Haar-distributed orthogonal matrix from QR of a Gaussian matrix.
Eigen::MatrixXd random_orthogonal(Eigen::Index m, std::uint64_t seed);

double logcosh_contrast(const Dataset& white_data, const Eigen::MatrixXd& B);

/// Symmetric fixed-point iteration with the tanh nonlinearity from a given
/// start:  b <- mean(z tanh(b^T z)) - mean(1 - tanh^2(b^T z)) b, then
/// symmetric orthogonalization, until min |diag(B_new B_old^T)| > 1 - tol.
FastIcaResult fastica_from(const Dataset& white_data, const Eigen::MatrixXd& B_init, double tol,
                           int max_iters);

/// Best of `restarts` random orthogonal starts by log-cosh contrast; ties go
/// to the lower restart index.
FastIcaResult fastica_symmetric(const Dataset& white_data, const FastIcaOptions& options = {});

/// Lower median (ceil(n/2)-th order statistic) of |values|.
double lower_abs_median(std::span<const double> values);

/// Rescales each row k of W so the lower median of |W_k X| is 1, and flips
/// its sign so the largest-magnitude entry is positive. Throws
/// DegenerateSample on a zero row or zero median.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& W, const Dataset& data);

/// W0 = B whitening, normalized by normalize_rows on `data`.
Eigen::MatrixXd compose_initial(const Eigen::MatrixXd& B, const WhiteningTransform& whitening,
                                const Dataset& data);

struct InitialEstimate {
  Eigen::MatrixXd W0;
  FastIcaResult fastica;
};

/// Whitening + FastICA + composition on already centered data.
InitialEstimate initial_estimate(const Dataset& centered, const FastIcaOptions& options = {});

}  // namespace effica
