#ifndef EEQUAKE_SPLINE_HPP
#define EEQUAKE_SPLINE_HPP

#include "eequake/common.hpp"

namespace eequake {

/// Natural cubic spline through strictly increasing knots (second derivative
/// zero at both ends). Two knots degrade to linear interpolation.
template <typename Scalar>
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(const VectorX<Scalar>& x, const VectorX<Scalar>& y)
      : x_(x), y_(y) {
    const Index m = x.size();
    if (m < 2 || y.size() != m)
      throw Error("spline: need >= 2 knots with matching values");
    for (Index i = 1; i < m; ++i)
      if (!(x(i) > x(i - 1)))
        throw Error("spline: knot abscissae must be strictly increasing");
    m2_ = VectorX<Scalar>::Zero(m);
    if (m == 2) return;

    // Thomas solve of the tridiagonal system for interior second derivatives.
    const Index k = m - 2;
    VectorX<Scalar> diag(k), sub(k), sup(k), rhs(k);
    for (Index i = 0; i < k; ++i) {
      const Scalar h0 = x(i + 1) - x(i);
      const Scalar h1 = x(i + 2) - x(i + 1);
      sub(i) = h0;
      diag(i) = Scalar(2) * (h0 + h1);
      sup(i) = h1;
      rhs(i) = Scalar(6) * ((y(i + 2) - y(i + 1)) / h1 - (y(i + 1) - y(i)) / h0);
    }
    for (Index i = 1; i < k; ++i) {
      const Scalar w = sub(i) / diag(i - 1);
      diag(i) -= w * sup(i - 1);
      rhs(i) -= w * rhs(i - 1);
    }
    m2_(k) = rhs(k - 1) / diag(k - 1);
    for (Index i = k - 1; i >= 1; --i)
      m2_(i) = (rhs(i - 1) - sup(i - 1) * m2_(i + 1)) / diag(i - 1);
  }

  Scalar operator()(Scalar t) const { return eval_segment(locate(t), t); }

  /// Evaluates on an ascending grid in one sweep.
  VectorX<Scalar> evaluate(const VectorX<Scalar>& grid) const {
    VectorX<Scalar> out(grid.size());
    Index seg = 0;
    for (Index i = 0; i < grid.size(); ++i) {
      const Scalar t = grid(i);
      while (seg + 2 < x_.size() && t >= x_(seg + 1)) ++seg;
      out(i) = eval_segment(seg, t);
    }
    return out;
  }

 private:
  Index locate(Scalar t) const {
    Index lo = 0, hi = x_.size() - 2;
    while (lo < hi) {
      const Index mid = (lo + hi + 1) / 2;
      if (t >= x_(mid)) lo = mid; else hi = mid - 1;
    }
    return lo;
  }

  Scalar eval_segment(Index lo, Scalar t) const {
    const Scalar h = x_(lo + 1) - x_(lo);
    const Scalar a = (x_(lo + 1) - t) / h;
    const Scalar b = (t - x_(lo)) / h;
    return a * y_(lo) + b * y_(lo + 1) +
           ((a * a * a - a) * m2_(lo) + (b * b * b - b) * m2_(lo + 1)) *
               (h * h) / Scalar(6);
  }

  VectorX<Scalar> x_, y_, m2_;
};

}  // namespace eequake

#endif  // EEQUAKE_SPLINE_HPP
