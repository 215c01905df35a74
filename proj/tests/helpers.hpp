// Test-only oracles and synthetic data generators. Everything here is kept
// independent of the library's implementation paths it is used to check.
#ifndef EEQUAKE_TESTS_HELPERS_HPP
#define EEQUAKE_TESTS_HELPERS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eequake/common.hpp"
#include "eequake/timeseries.hpp"

namespace helpers {

using eequake::Index;
using eequake::MatrixX;
using eequake::VectorX;

inline constexpr double kPi = std::numbers::pi;

// --------------------------------------------------------------------------
// Signal generators
// --------------------------------------------------------------------------

inline VectorX<double> sine(Index n, double cycles, double amplitude = 1.0,
                            double phase = 0.0) {
  VectorX<double> x(n);
  for (Index i = 0; i < n; ++i)
    x(i) = amplitude * std::sin(2 * kPi * cycles * i / double(n) + phase);
  return x;
}

inline VectorX<double> cosine(Index n, double cycles, double amplitude = 1.0) {
  VectorX<double> x(n);
  for (Index i = 0; i < n; ++i)
    x(i) = amplitude * std::cos(2 * kPi * cycles * i / double(n));
  return x;
}

inline VectorX<double> gaussian_noise(Index n, unsigned seed,
                                      double stdev = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, stdev);
  VectorX<double> x(n);
  for (Index i = 0; i < n; ++i) x(i) = dist(rng);
  return x;
}

inline VectorX<double> random_walk(Index n, unsigned seed) {
  VectorX<double> steps = gaussian_noise(n, seed);
  VectorX<double> x(n);
  double acc = 0;
  for (Index i = 0; i < n; ++i) {
    acc += steps(i);
    x(i) = acc;
  }
  return x;
}

// Mean zero-crossing frequency in cycles over the whole record.
inline double zero_crossing_cycles(const VectorX<double>& x) {
  Index zc = 0;
  for (Index i = 1; i < x.size(); ++i)
    zc += ((x(i - 1) >= 0) != (x(i) >= 0));
  return double(zc) / 2.0;
}

// --------------------------------------------------------------------------
// Synthetic price series
// --------------------------------------------------------------------------

struct JumpSeriesSpec {
  Index n = 600;
  Index jump_at = 585;
  double base = 100.0;
  double tone_amplitude = 1.5;
  double tone_cycles = 9.0;     // ~64-bar period on 600 bars
  double noise_stdev = 0.25;
  double jump = 0.0;            // 0 = 8x the bar-to-bar stdev
  unsigned seed = 7;
};

// Smooth tone + iid noise + a persisted step at jump_at. The step height
// defaults to 8x the standard deviation of the pre-jump bar-to-bar changes,
// measured on the realized path (the construction oracle for the detector).
inline VectorX<double> jump_close_series(const JumpSeriesSpec& spec,
                                         double* jump_height = nullptr) {
  VectorX<double> close =
      VectorX<double>::Constant(spec.n, spec.base) +
      sine(spec.n, spec.tone_cycles, spec.tone_amplitude) +
      gaussian_noise(spec.n, spec.seed, spec.noise_stdev);
  double height = spec.jump;
  if (height == 0.0) {
    double sum = 0, sum2 = 0;
    for (Index i = 1; i < spec.jump_at; ++i) {
      const double d = close(i) - close(i - 1);
      sum += d;
      sum2 += d * d;
    }
    const double m = sum / double(spec.jump_at - 1);
    height = 8.0 * std::sqrt(sum2 / double(spec.jump_at - 1) - m * m);
  }
  for (Index i = spec.jump_at; i < spec.n; ++i) close(i) += height;
  if (jump_height) *jump_height = height;
  return close;
}

inline eequake::timeseries::PriceSeries series_from_closes(
    const VectorX<double>& closes, const std::string& interval = "daily") {
  eequake::timeseries::PriceSeries s;
  s.interval = interval;
  s.bars.reserve(size_t(closes.size()));
  for (Index i = 0; i < closes.size(); ++i) {
    eequake::timeseries::PriceBar bar;
    char ts[32];
    std::snprintf(ts, sizeof(ts), "t%06td", ptrdiff_t(i));
    bar.timestamp = ts;
    bar.open = bar.high = bar.low = bar.close = closes(i);
    s.bars.push_back(bar);
  }
  return s;
}

inline std::string closes_to_csv(const VectorX<double>& closes) {
  std::ostringstream out;
  out << "Date,Open,High,Low,Close,Adj Close,Volume\n";
  out.precision(17);
  for (Index i = 0; i < closes.size(); ++i) {
    char ts[32];
    std::snprintf(ts, sizeof(ts), "2021-%02td-%02td %04td", ptrdiff_t(i / 744 + 1),
                  ptrdiff_t((i / 24) % 31 + 1), ptrdiff_t(i % 24));
    const double c = closes(i);
    out << ts << "," << c << "," << c << "," << c << "," << c << "," << c
        << ",1000\n";
  }
  return out.str();
}

// --------------------------------------------------------------------------
// OLS oracle: plain normal equations, independent of the QR path
// --------------------------------------------------------------------------

inline VectorX<double> normal_equations(const MatrixX<double>& design,
                                        const VectorX<double>& target) {
  const MatrixX<double> xtx = design.transpose() * design;
  const VectorX<double> xty = design.transpose() * target;
  return xtx.fullPivLu().solve(xty);
}

// --------------------------------------------------------------------------
// Projected-gradient oracle for the epsilon-SVR dual
// --------------------------------------------------------------------------
//
// Variables are the 2n stacked (alpha, alpha*) in [0, C]^{2n} with
// sum(alpha - alpha*) = 0. Maximizes
//   -1/2 (a - a*)' K (a - a*) - eps * sum(a + a*) + y' (a - a*)
// by projected gradient ascent; the projection onto the box intersected
// with the hyperplane is found by bisection on the multiplier.

struct QpOracleResult {
  VectorX<double> beta;  // alpha - alpha*
  double objective = 0;
};

inline VectorX<double> project_box_hyperplane(const VectorX<double>& z,
                                              double c) {
  const Index m = z.size();
  const Index n = m / 2;
  auto clipped = [&](double lambda) {
    VectorX<double> x(m);
    for (Index i = 0; i < n; ++i)
      x(i) = std::clamp(z(i) - lambda, 0.0, c);
    for (Index i = n; i < m; ++i)
      x(i) = std::clamp(z(i) + lambda, 0.0, c);
    return x;
  };
  auto constraint = [&](double lambda) {
    const VectorX<double> x = clipped(lambda);
    double s = 0;
    for (Index i = 0; i < n; ++i) s += x(i) - x(n + i);
    return s;
  };
  double lo = -1, hi = 1;
  while (constraint(lo) < 0) lo *= 2;
  while (constraint(hi) > 0) hi *= 2;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (constraint(mid) > 0) lo = mid; else hi = mid;
  }
  return clipped(0.5 * (lo + hi));
}

// Accelerated projected gradient (FISTA with function-value restart).
inline QpOracleResult qp_oracle(const MatrixX<double>& k,
                                const VectorX<double>& y, double c,
                                double eps, int max_iterations = 100000) {
  const Index n = y.size();

  Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(k);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / (2.0 * lmax + 1e-9);

  auto objective = [&](const VectorX<double>& v) {
    const VectorX<double> beta = v.head(n) - v.tail(n);
    return -0.5 * beta.dot(k * beta) - eps * v.sum() + y.dot(beta);
  };
  auto ascent_step = [&](const VectorX<double>& v) {
    const VectorX<double> beta = v.head(n) - v.tail(n);
    const VectorX<double> kb = k * beta;
    VectorX<double> grad(2 * n);
    grad.head(n) = -kb + y - VectorX<double>::Constant(n, eps);
    grad.tail(n) = kb - y - VectorX<double>::Constant(n, eps);
    return project_box_hyperplane(v + step * grad, c);
  };

  VectorX<double> x = VectorX<double>::Zero(2 * n);
  VectorX<double> x_prev = x;
  double fx = 0;  // objective at zero
  double t = 1, t_prev = 1;
  int stall = 0;
  for (int it = 0; it < max_iterations; ++it) {
    const VectorX<double> v = x + ((t_prev - 1) / t) * (x - x_prev);
    VectorX<double> xn = ascent_step(v);
    double fxn = objective(xn);
    if (fxn < fx) {  // momentum overshoot: restart from the plain step
      xn = ascent_step(x);
      fxn = objective(xn);
      t = 1;
    }
    x_prev = x;
    x = xn;
    t_prev = t;
    t = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    if (fxn - fx <= 1e-13 * (1 + std::abs(fx))) {
      if (++stall > 100) break;
    } else {
      stall = 0;
    }
    fx = fxn;
  }
  QpOracleResult res;
  res.beta = x.head(n) - x.tail(n);
  res.objective = objective(x);
  return res;
}

}  // namespace helpers

#endif  // EEQUAKE_TESTS_HELPERS_HPP
