#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "effica/error.hpp"

namespace effica {

/// Cubic (order 4) B-spline basis on equally spaced knots.
///
/// num_basis functions live on num_basis + 4 knots spanning [lower, upper],
/// so the knot gap is (upper - lower) / (num_basis + 3) and basis function i
/// (0-based) is supported on [knot(i), knot(i + 4)). The order-1 functions
/// use half-open indicators, hence every function vanishes at t = upper and
/// evaluation at a knot takes the right-continuous limit.
///
/// Immutable after construction.
template <typename Scalar = double>
class BSplineBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr int kOrder = 4;

  /// Nonzero slice of the basis at one point: up to four consecutive
  /// functions starting at `first`. Slots whose index falls outside
  /// [0, num_basis) are zero.
  struct Local {
    Eigen::Index first = 0;
    bool inside = false;
    std::array<Scalar, kOrder> value{};
    std::array<Scalar, kOrder> deriv{};
    std::array<Scalar, kOrder> second{};
  };

  BSplineBasis(Scalar lower, Scalar upper, Eigen::Index num_basis)
      : lower_(lower), upper_(upper), num_basis_(num_basis) {
    if (!(upper > lower) || !std::isfinite(static_cast<double>(lower)) ||
        !std::isfinite(static_cast<double>(upper))) {
      throw Error(ErrorKind::InvalidArgument,
                  "BSplineBasis: degenerate interval [" + std::to_string(static_cast<double>(lower)) +
                      ", " + std::to_string(static_cast<double>(upper)) + "]");
    }
    if (num_basis < 1) {
      throw Error(ErrorKind::InvalidArgument, "BSplineBasis: num_basis must be >= 1");
    }
    spacing_ = (upper - lower) / Scalar(num_basis + 3);
    knots_.resize(num_basis + kOrder);
    for (Eigen::Index i = 0; i < knots_.size(); ++i) knots_[i] = lower + Scalar(i) * spacing_;
    knots_[knots_.size() - 1] = upper;
  }

  Scalar lower() const { return lower_; }
  Scalar upper() const { return upper_; }
  Eigen::Index num_basis() const { return num_basis_; }
  Scalar spacing() const { return spacing_; }
  const Vector& knots() const { return knots_; }

  bool contains(Scalar t) const { return t >= lower_ && t < upper_; }

  /// Index of the knot span [knot(j), knot(j + 1)) holding t, located by
  /// arithmetic on the uniform spacing. Requires contains(t).
  Eigen::Index span(Scalar t) const {
    using std::floor;
    const Eigen::Index last = num_basis_ + 2;
    auto j = static_cast<Eigen::Index>(floor((t - lower_) / spacing_));
    if (j < 0) j = 0;
    if (j > last) j = last;
    // Correct the rounding of the division against the stored knots.
    while (j > 0 && t < knots_[j]) --j;
    while (j < last && t >= knots_[j + 1]) ++j;
    return j;
  }

  /// Values and first two derivatives of the nonzero functions at t, by the
  /// order recursion
  ///   B_i^k = (t - x_i) / (x_{i+k-1} - x_i) B_i^{k-1}
  ///         + (x_{i+k} - t) / (x_{i+k} - x_{i+1}) B_{i+1}^{k-1}
  /// restricted to the functions that do not vanish on the span.
  Local local(Scalar t) const {
    Local out;
    if (!contains(t)) return out;
    const Eigen::Index j = span(t);
    out.inside = true;
    out.first = j - (kOrder - 1);

    // rows[k-1][r] holds B_{j-k+1+r}^k(t). Knots left of lower are virtual
    // (uniform extension); they only feed slots that are discarded.
    std::array<std::array<Scalar, kOrder>, kOrder> rows{};
    rows[0][0] = Scalar(1);
    for (int k = 2; k <= kOrder; ++k) {
      const Scalar width = Scalar(k - 1) * spacing_;
      for (int r = 0; r < k; ++r) {
        const Eigen::Index i = j - k + 1 + r;
        const Scalar left = r >= 1 ? rows[k - 2][r - 1] : Scalar(0);   // B_i^{k-1}
        const Scalar right = r < k - 1 ? rows[k - 2][r] : Scalar(0);   // B_{i+1}^{k-1}
        const Scalar xi = knot_at(i);
        const Scalar xik = knot_at(i + k);
        rows[k - 1][r] = (t - xi) / width * left + (xik - t) / width * right;
      }
    }

    // d/dt B_i^4 = 3 / (3 delta) (B_i^3 - B_{i+1}^3); same pattern one order down
    // for the second derivative.
    const Scalar inv = Scalar(1) / spacing_;
    for (int r = 0; r < kOrder; ++r) {
      const Scalar b3_i = r >= 1 ? rows[2][r - 1] : Scalar(0);
      const Scalar b3_next = r < kOrder - 1 ? rows[2][r] : Scalar(0);
      const Scalar b2_i = r >= 2 ? rows[1][r - 2] : Scalar(0);
      const Scalar b2_mid = (r >= 1 && r - 1 < 2) ? rows[1][r - 1] : Scalar(0);
      const Scalar b2_last = r < 2 ? rows[1][r] : Scalar(0);
      out.value[r] = rows[3][r];
      out.deriv[r] = (b3_i - b3_next) * inv;
      out.second[r] = (b2_i - Scalar(2) * b2_mid + b2_last) * inv * inv;
    }
    for (int r = 0; r < kOrder; ++r) {
      const Eigen::Index i = out.first + r;
      if (i < 0 || i >= num_basis_) {
        out.value[r] = out.deriv[r] = out.second[r] = Scalar(0);
      }
    }
    return out;
  }

 private:
  Scalar knot_at(Eigen::Index i) const {
    if (i >= 0 && i < knots_.size()) return knots_[i];
    return lower_ + Scalar(i) * spacing_;
  }

  Scalar lower_;
  Scalar upper_;
  Eigen::Index num_basis_;
  Scalar spacing_{};
  Vector knots_;
};

template <typename Scalar>
BSplineBasis<Scalar> make_basis(Scalar lower, Scalar upper, Eigen::Index num_basis) {
  return BSplineBasis<Scalar>(lower, upper, num_basis);
}

inline BSplineBasis<double> make_basis(double lower, double upper, Eigen::Index num_basis) {
  return BSplineBasis<double>(lower, upper, num_basis);
}

namespace detail {
template <typename Scalar, typename Member>
typename BSplineBasis<Scalar>::Vector scatter(const BSplineBasis<Scalar>& basis, Scalar t,
                                              Member member) {
  typename BSplineBasis<Scalar>::Vector out =
      BSplineBasis<Scalar>::Vector::Zero(basis.num_basis());
  const auto loc = basis.local(t);
  if (!loc.inside) return out;
  for (int r = 0; r < BSplineBasis<Scalar>::kOrder; ++r) {
    const Eigen::Index i = loc.first + r;
    if (i >= 0 && i < basis.num_basis()) out[i] = (loc.*member)[r];
  }
  return out;
}
}  // namespace detail

/// All basis values at t; zero outside [lower, upper).
template <typename Scalar>
typename BSplineBasis<Scalar>::Vector eval_basis(const BSplineBasis<Scalar>& basis, Scalar t) {
  return detail::scatter(basis, t, &BSplineBasis<Scalar>::Local::value);
}

template <typename Scalar>
typename BSplineBasis<Scalar>::Vector eval_basis_deriv(const BSplineBasis<Scalar>& basis,
                                                       Scalar t) {
  return detail::scatter(basis, t, &BSplineBasis<Scalar>::Local::deriv);
}

template <typename Scalar>
typename BSplineBasis<Scalar>::Vector eval_basis_second_deriv(const BSplineBasis<Scalar>& basis,
                                                              Scalar t) {
  return detail::scatter(basis, t, &BSplineBasis<Scalar>::Local::second);
}

}  // namespace effica
