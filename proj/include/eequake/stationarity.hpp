#ifndef EEQUAKE_STATIONARITY_HPP
#define EEQUAKE_STATIONARITY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>

#include "eequake/common.hpp"
#include "eequake/hht.hpp"

namespace eequake::stationarity {

enum class Deterministic { None, Constant, ConstantTrend };

inline const char* to_string(Deterministic d) {
  switch (d) {
    case Deterministic::None: return "none";
    case Deterministic::Constant: return "constant";
    default: return "constant+trend";
  }
}

struct AdfSpec {
  Deterministic deterministic = Deterministic::Constant;
  std::optional<int> lags;  // nullopt selects by AIC up to the Schwert cap
};

template <typename Scalar>
struct OlsFit {
  VectorX<Scalar> coefficients;
  VectorX<Scalar> standard_errors;
  VectorX<Scalar> residuals;
};

/// Least squares via column-pivoted QR; standard errors from the unbiased
/// residual variance and the inverse normal matrix.
template <typename Scalar>
OlsFit<Scalar> ols_fit(const MatrixX<Scalar>& design,
                       const VectorX<Scalar>& target) {
  const Index m = design.rows();
  const Index k = design.cols();
  if (m != target.size()) throw Error("ols_fit: row/target length mismatch");
  if (m < k + 1) throw Error("ols_fit: insufficient rows");
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(design);
  if (qr.rank() < k) throw Error("ols_fit: rank-deficient design matrix");

  OlsFit<Scalar> fit;
  fit.coefficients = qr.solve(target);
  fit.residuals = target - design * fit.coefficients;
  const Scalar s2 = fit.residuals.squaredNorm() / Scalar(m - k);
  const MatrixX<Scalar> xtx_inv =
      (design.transpose() * design).ldlt().solve(MatrixX<Scalar>::Identity(k, k));
  fit.standard_errors = (s2 * xtx_inv.diagonal().array()).sqrt().matrix();
  return fit;
}

namespace detail {

// MacKinnon (2010) response-surface coefficients for the Dickey-Fuller tau
// distribution, one regressor (N = 1): cv = b0 + b1/T + b2/T^2 + b3/T^3,
// rows ordered {1%, 5%, 10%}.
inline const std::array<std::array<double, 4>, 3>& tau_coeffs(Deterministic d) {
  static const std::array<std::array<double, 4>, 3> nc = {{
      {-2.56574, -2.2358, -3.627, 0.0},
      {-1.94100, -0.2686, -3.365, 31.223},
      {-1.61682, 0.2656, -2.714, 25.364},
  }};
  static const std::array<std::array<double, 4>, 3> c = {{
      {-3.43035, -6.5393, -16.786, -79.433},
      {-2.86154, -2.8903, -4.234, -40.040},
      {-2.56677, -1.5384, -2.809, 0.0},
  }};
  static const std::array<std::array<double, 4>, 3> ct = {{
      {-3.95877, -9.0531, -28.428, -134.155},
      {-3.41049, -4.3904, -9.036, -45.374},
      {-3.12705, -2.5856, -3.925, -22.380},
  }};
  switch (d) {
    case Deterministic::None: return nc;
    case Deterministic::Constant: return c;
    default: return ct;
  }
}

// MacKinnon (1994) tau -> p-value regression surfaces, N = 1. Quadratic in
// the left tail, cubic elsewhere; the result feeds the normal CDF.
struct PvalSurface {
  double tau_star, tau_min, tau_max;
  std::array<double, 3> small;  // p = Phi(s0 + s1 t + s2 t^2)
  std::array<double, 4> large;  // p = Phi(l0 + l1 t + l2 t^2 + l3 t^3)
};

inline const PvalSurface& pval_surface(Deterministic d) {
  static const PvalSurface nc{-1.04, -19.04, std::numeric_limits<double>::infinity(),
                              {0.6344, 1.2378, 3.2496e-2},
                              {0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2}};
  static const PvalSurface c{-1.61, -18.83, 2.74,
                             {2.1659, 1.4412, 3.8269e-2},
                             {1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2}};
  static const PvalSurface ct{-2.89, -16.18, 0.7,
                              {3.2512, 1.6047, 4.9588e-2},
                              {2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2}};
  switch (d) {
    case Deterministic::None: return nc;
    case Deterministic::Constant: return c;
    default: return ct;
  }
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace detail

/// Finite-sample Dickey-Fuller critical value at 1/5/10%; the asymptotic
/// value is approached as n grows.
inline double mackinnon_critical(Index n, Deterministic deterministic,
                                 int level_percent) {
  if (n < 20) throw Error("mackinnon_critical: sample too small (n >= 20)");
  int row;
  switch (level_percent) {
    case 1: row = 0; break;
    case 5: row = 1; break;
    case 10: row = 2; break;
    default:
      throw Error("mackinnon_critical: unsupported level " +
                  std::to_string(level_percent) + "%");
  }
  const auto& b = detail::tau_coeffs(deterministic)[static_cast<size_t>(row)];
  const double T = static_cast<double>(n);
  return b[0] + b[1] / T + b[2] / (T * T) + b[3] / (T * T * T);
}

/// Approximate p-value of a Dickey-Fuller tau statistic.
inline double mackinnon_pvalue(double t_statistic, Deterministic deterministic) {
  const auto& s = detail::pval_surface(deterministic);
  if (t_statistic > s.tau_max) return 1.0;
  if (t_statistic < s.tau_min) return 0.0;
  double z;
  if (t_statistic <= s.tau_star) {
    z = s.small[0] + s.small[1] * t_statistic +
        s.small[2] * t_statistic * t_statistic;
  } else {
    z = s.large[0] + t_statistic * (s.large[1] + t_statistic * (s.large[2] +
        t_statistic * s.large[3]));
  }
  return detail::norm_cdf(z);
}

/// Schwert's rule of thumb for the maximum augmentation lag.
inline int schwert_max_lags(Index n) {
  return static_cast<int>(
      std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

namespace detail {

// Difference regression per the augmented Dickey-Fuller layout: columns are
// [deterministic terms..., y_{t-1}, dy_{t-1}, ..., dy_{t-p}].
template <typename Scalar>
void build_adf_design(const VectorX<Scalar>& y, int lags, Index start,
                      Deterministic det, MatrixX<Scalar>& design,
                      VectorX<Scalar>& target, Index& level_col) {
  const Index n = y.size();
  const Index rows = n - 1 - start;
  const Index n_det = det == Deterministic::None ? 0
                      : det == Deterministic::Constant ? 1 : 2;
  design.resize(rows, n_det + 1 + lags);
  target.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    const Index t = start + 1 + r;  // index into y of the regressand dy_t
    target(r) = y(t) - y(t - 1);
    Index c = 0;
    if (n_det >= 1) design(r, c++) = Scalar(1);
    if (n_det >= 2) design(r, c++) = Scalar(t);
    design(r, c++) = y(t - 1);
    for (int j = 1; j <= lags; ++j)
      design(r, c++) = y(t - j) - y(t - j - 1);
  }
  level_col = n_det;
}

template <typename Scalar>
Scalar aic(const OlsFit<Scalar>& fit, Index rows, Index params) {
  const Scalar ssr = fit.residuals.squaredNorm();
  return Scalar(rows) * std::log(ssr / Scalar(rows)) + Scalar(2 * params);
}

}  // namespace detail

/// Lag order minimizing AIC over 0..max_lags; every candidate is fit on the
/// common sample implied by max_lags so the criteria are comparable.
template <typename Scalar>
int select_lags(const VectorX<Scalar>& series, int max_lags,
                Deterministic deterministic = Deterministic::Constant) {
  if (max_lags < 0) throw Error("select_lags: max_lags must be >= 0");
  if (series.size() < 20 + max_lags)
    throw Error("select_lags: series too short");
  int best = 0;
  Scalar best_aic = std::numeric_limits<Scalar>::infinity();
  for (int p = 0; p <= max_lags; ++p) {
    MatrixX<Scalar> design;
    VectorX<Scalar> target;
    Index level_col;
    detail::build_adf_design(series, p, Index(max_lags), deterministic, design,
                             target, level_col);
    const auto fit = ols_fit(design, target);
    const Scalar a = detail::aic(fit, design.rows(), design.cols());
    if (a < best_aic) {
      best_aic = a;
      best = p;
    }
  }
  return best;
}

struct AdfResult {
  double t_statistic = 0;
  std::map<int, double> critical_values;  // level percent -> cv
  double p_value = 1;
  double alpha_hat = 1;  // levels-form AR root estimate
  double se_alpha = 0;
  int lags_used = 0;
  std::optional<int> reject_unit_root_at;  // tightest level, if any
};

/// Augmented Dickey-Fuller unit-root test. The null is a unit root; it is
/// rejected at a level when the t-statistic falls below that level's
/// critical value.
template <typename Scalar>
AdfResult adf_test(const VectorX<Scalar>& series, const AdfSpec& spec = {}) {
  const Index n = series.size();
  if (spec.lags && *spec.lags > n / 3)
    throw Error("adf_test: explicit lag count exceeds length/3");
  const int auto_cap = std::max(
      0, std::min({schwert_max_lags(n), static_cast<int>(n / 3),
                   static_cast<int>(n) - 20}));
  const int lags = spec.lags ? *spec.lags
                             : select_lags(series, auto_cap, spec.deterministic);
  if (n < 20 + lags) throw Error("adf_test: series too short");

  MatrixX<Scalar> design;
  VectorX<Scalar> target;
  Index level_col;
  detail::build_adf_design(series, lags, Index(lags), spec.deterministic,
                           design, target, level_col);
  const auto fit = ols_fit(design, target);

  AdfResult res;
  res.lags_used = lags;
  const double rho = static_cast<double>(fit.coefficients(level_col));
  const double se = static_cast<double>(fit.standard_errors(level_col));
  res.alpha_hat = 1.0 + rho;  // dy_t = rho * y_{t-1} + ... with rho = alpha - 1
  res.se_alpha = se;
  res.t_statistic = rho / se;
  const Index nobs = design.rows();
  for (int level : {1, 5, 10})
    res.critical_values[level] =
        mackinnon_critical(nobs, spec.deterministic, level);
  res.p_value = mackinnon_pvalue(res.t_statistic, spec.deterministic);
  for (int level : {1, 5, 10}) {
    if (res.t_statistic < res.critical_values[level]) {
      res.reject_unit_root_at = level;
      break;
    }
  }
  return res;
}

/// Per-bin degree of nonstationarity of a Hilbert spectrum.
template <typename Scalar>
struct DnsCurve {
  VectorX<Scalar> frequencies;  // populated bin centers, radians per bar
  VectorX<Scalar> values;
  Scalar flatness = 0;          // max - min over populated bins
};

/// DNS(w) = (1/T) sum_t (1 - H(t,w)/h(w))^2 over bins with h(w) > 0, with
/// h(w) the time-average of H. Flat near zero for stationary content.
template <typename Scalar>
DnsCurve<Scalar> dns(const hht::HilbertSpectrum<Scalar>& spectrum) {
  const Index T = spectrum.time_bins;
  if (T == 0 || spectrum.cells.nonZeros() == 0)
    throw Error("dns: empty spectrum");
  const VectorX<Scalar> h = hht::marginal(spectrum);

  std::vector<Scalar> freqs, vals;
  for (Index b = 0; b < spectrum.freq_bins; ++b) {
    if (!(h(b) > Scalar(0))) continue;
    Scalar sum = 0;
    Index populated = 0;
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(
             spectrum.cells, b);
         it; ++it) {
      const Scalar d = Scalar(1) - it.value() / h(b);
      sum += d * d;
      ++populated;
    }
    sum += Scalar(T - populated);  // cells with H = 0 contribute (1 - 0)^2
    freqs.push_back(spectrum.bin_center(b));
    vals.push_back(sum / Scalar(T));
  }
  DnsCurve<Scalar> curve;
  curve.frequencies = Eigen::Map<const VectorX<Scalar>>(freqs.data(),
                                                        static_cast<Index>(freqs.size()));
  curve.values = Eigen::Map<const VectorX<Scalar>>(vals.data(),
                                                   static_cast<Index>(vals.size()));
  curve.flatness = curve.values.maxCoeff() - curve.values.minCoeff();
  return curve;
}

}  // namespace eequake::stationarity

#endif  // EEQUAKE_STATIONARITY_HPP
