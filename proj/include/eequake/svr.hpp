#ifndef EEQUAKE_SVR_HPP
#define EEQUAKE_SVR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "eequake/common.hpp"
#include "eequake/timeseries.hpp"

namespace eequake::svr {

template <typename Scalar>
struct Hyperparams {
  Scalar c = 1;
  Scalar gamma = Scalar(0.1);
  Scalar epsilon = Scalar(0.1);
};

/// K(x, y) = exp(-gamma * ||x - y||^2); gamma = 0 degrades to the constant
/// kernel, which the tests rely on.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar rbf_kernel(const Eigen::MatrixBase<DerivedX>& x,
                                     const Eigen::MatrixBase<DerivedY>& y,
                                     typename DerivedX::Scalar gamma) {
  if (x.size() != y.size()) throw Error("rbf_kernel: dimension mismatch");
  return std::exp(-gamma * (x - y).squaredNorm());
}

template <typename Scalar>
MatrixX<Scalar> gram_matrix(const MatrixX<Scalar>& rows, Scalar gamma) {
  const Index n = rows.rows();
  MatrixX<Scalar> k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = Scalar(1);
    for (Index j = i + 1; j < n; ++j) {
      k(i, j) = rbf_kernel(rows.row(i), rows.row(j), gamma);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

struct TrainConfig {
  double kkt_tolerance = 1e-6;
  long max_pair_updates = 1'000'000;
};

/// Trained regressor state. dual_coefficients holds beta_i = alpha_i -
/// alpha_i^* for the retained rows; |beta_i| <= C always. Scalers, when
/// present, are applied around the kernel expansion at predict time.
template <typename Scalar>
struct SvrModel {
  MatrixX<Scalar> support_vectors;
  VectorX<Scalar> dual_coefficients;
  std::vector<Index> support_indices;  // rows of the training set retained
  Scalar bias = 0;
  Hyperparams<Scalar> hyperparams;
  std::optional<timeseries::Scaler<Scalar>> feature_scaler;
  std::optional<timeseries::Scaler<Scalar>> target_scaler;
  bool converged = true;
  long pair_updates = 0;
};

namespace detail {

// Exact line search of the convex piecewise quadratic in the transfer d
// (beta_i += d, beta_j -= d): breakpoints where either coefficient crosses
// zero, box limits from |beta| <= C.
template <typename Scalar>
Scalar optimize_pair(Scalar beta_i, Scalar beta_j, Scalar g, Scalar eta,
                     Scalar epsilon, Scalar c) {
  const Scalar lo = std::max(-c - beta_i, beta_j - c);
  const Scalar hi = std::min(c - beta_i, beta_j + c);
  auto phi = [&](Scalar d) {
    return Scalar(0.5) * eta * d * d + g * d +
           epsilon * (std::abs(beta_i + d) - std::abs(beta_i)) +
           epsilon * (std::abs(beta_j - d) - std::abs(beta_j));
  };

  std::vector<Scalar> edges = {lo, hi};
  if (-beta_i > lo && -beta_i < hi) edges.push_back(-beta_i);
  if (beta_j > lo && beta_j < hi) edges.push_back(beta_j);
  std::sort(edges.begin(), edges.end());

  Scalar best_d = 0;
  Scalar best_phi = 0;  // phi(0) = 0
  auto consider = [&](Scalar d) {
    const Scalar v = phi(d);
    if (v < best_phi) {
      best_phi = v;
      best_d = d;
    }
  };
  for (size_t s = 0; s + 1 < edges.size(); ++s) {
    const Scalar a = edges[s], b = edges[s + 1];
    consider(a);
    consider(b);
    const Scalar mid = (a + b) / Scalar(2);
    const Scalar si = (beta_i + mid) >= Scalar(0) ? Scalar(1) : Scalar(-1);
    const Scalar sj = (beta_j - mid) > Scalar(0) ? Scalar(1) : Scalar(-1);
    const Scalar d_star = -(g + epsilon * (si - sj)) / eta;
    if (d_star > a && d_star < b) consider(d_star);
  }
  return best_d;
}

}  // namespace detail

/// Solves the epsilon-insensitive dual by sequential minimal optimization on
/// maximal violating pairs, to the configured KKT tolerance. Deterministic
/// for a fixed row order.
template <typename Scalar>
SvrModel<Scalar> train(const MatrixX<Scalar>& rows,
                       const VectorX<Scalar>& targets,
                       const Hyperparams<Scalar>& hp,
                       const TrainConfig& config = {}) {
  const Index n = rows.rows();
  if (n < 1) throw Error("train: need at least one training row");
  if (targets.size() != n) throw Error("train: row/target length mismatch");
  if (!targets.allFinite()) throw Error("train: non-finite targets");
  if (!(hp.c > Scalar(0))) throw Error("train: C must be positive");
  if (hp.gamma < Scalar(0)) throw Error("train: gamma must be >= 0");
  if (hp.epsilon < Scalar(0)) throw Error("train: epsilon must be >= 0");

  const Scalar c = hp.c;
  const Scalar eps = hp.epsilon;
  const MatrixX<Scalar> k = gram_matrix(rows, hp.gamma);
  VectorX<Scalar> beta = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> kbeta = VectorX<Scalar>::Zero(n);
  const Scalar zero_tol = Scalar(1e-12) * std::max(Scalar(1), c);

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  bool converged = false;
  long updates = 0;
  while (updates < config.max_pair_updates) {
    // b must satisfy lower(i) <= b <= upper(i) for every i at optimality.
    Scalar max_lower = -inf, min_upper = inf;
    Index i_lo = -1, j_up = -1;
    for (Index t = 0; t < n; ++t) {
      const Scalar f = targets(t) - kbeta(t);
      const bool at_upper = beta(t) >= c - zero_tol;
      const bool at_lower = beta(t) <= -c + zero_tol;
      const bool positive = beta(t) > zero_tol;
      const bool negative = beta(t) < -zero_tol;
      Scalar lower, upper;
      if (at_upper) {
        lower = -inf;
        upper = f - eps;
      } else if (at_lower) {
        lower = f + eps;
        upper = inf;
      } else if (positive) {
        lower = upper = f - eps;
      } else if (negative) {
        lower = upper = f + eps;
      } else {
        lower = f - eps;
        upper = f + eps;
      }
      if (lower > max_lower) {
        max_lower = lower;
        i_lo = t;
      }
      if (upper < min_upper) {
        min_upper = upper;
        j_up = t;
      }
    }
    if (max_lower - min_upper < Scalar(config.kkt_tolerance)) {
      converged = true;
      break;
    }
    const Index i = i_lo, j = j_up;
    const Scalar eta =
        std::max(k(i, i) + k(j, j) - 2 * k(i, j), Scalar(1e-12));
    const Scalar g = kbeta(i) - kbeta(j) - targets(i) + targets(j);
    const Scalar d = detail::optimize_pair(beta(i), beta(j), g, eta, eps, c);
    if (d == Scalar(0)) break;  // numerically stalled
    beta(i) = std::clamp(beta(i) + d, -c, c);
    beta(j) = std::clamp(beta(j) - d, -c, c);
    kbeta += d * (k.col(i) - k.col(j));
    ++updates;
  }

  SvrModel<Scalar> model;
  model.hyperparams = hp;
  model.converged = converged;
  model.pair_updates = updates;

  // Bias: average over interior support vectors; otherwise the midpoint of
  // the feasible interval (for an empty expansion this is exactly the
  // midrange of the targets).
  Scalar bias_sum = 0;
  Index bias_count = 0;
  for (Index t = 0; t < n; ++t) {
    const Scalar abs_b = std::abs(beta(t));
    if (abs_b > zero_tol && abs_b < c - zero_tol) {
      const Scalar f = targets(t) - kbeta(t);
      bias_sum += beta(t) > 0 ? f - eps : f + eps;
      ++bias_count;
    }
  }
  if (bias_count > 0) {
    model.bias = bias_sum / Scalar(bias_count);
  } else if ((beta.array().abs() > zero_tol).any()) {
    Scalar max_lower = -inf, min_upper = inf;
    for (Index t = 0; t < n; ++t) {
      const Scalar f = targets(t) - kbeta(t);
      if (beta(t) >= c - zero_tol) {
        min_upper = std::min(min_upper, f - eps);
      } else if (beta(t) <= -c + zero_tol) {
        max_lower = std::max(max_lower, f + eps);
      } else {
        max_lower = std::max(max_lower, f - eps);
        min_upper = std::min(min_upper, f + eps);
      }
    }
    model.bias = (max_lower + min_upper) / Scalar(2);
  } else {
    model.bias = (targets.maxCoeff() + targets.minCoeff()) / Scalar(2);
  }

  Index n_sv = 0;
  for (Index t = 0; t < n; ++t)
    if (std::abs(beta(t)) > zero_tol) ++n_sv;
  model.support_vectors.resize(n_sv, rows.cols());
  model.dual_coefficients.resize(n_sv);
  model.support_indices.reserve(static_cast<size_t>(n_sv));
  Index s = 0;
  for (Index t = 0; t < n; ++t) {
    if (std::abs(beta(t)) > zero_tol) {
      model.support_vectors.row(s) = rows.row(t);
      model.dual_coefficients(s) = beta(t);
      model.support_indices.push_back(t);
      ++s;
    }
  }
  return model;
}

namespace detail {

template <typename Scalar>
Scalar expansion(const SvrModel<Scalar>& model, const VectorX<Scalar>& row) {
  Scalar sum = model.bias;
  for (Index s = 0; s < model.support_vectors.rows(); ++s)
    sum += model.dual_coefficients(s) *
           rbf_kernel(model.support_vectors.row(s).transpose(), row,
                      model.hyperparams.gamma);
  return sum;
}

}  // namespace detail

/// Kernel expansion sum_i beta_i K(x_i, row) + b, with the model's scalers
/// applied around it when present.
template <typename Scalar>
Scalar predict(const SvrModel<Scalar>& model, const VectorX<Scalar>& row) {
  VectorX<Scalar> x = row;
  if (model.feature_scaler) x = timeseries::apply(*model.feature_scaler, x);
  if (x.size() != model.support_vectors.cols() &&
      model.support_vectors.rows() > 0)
    throw Error("predict: dimension mismatch");
  Scalar y = detail::expansion(model, x);
  if (model.target_scaler) {
    VectorX<Scalar> t(1);
    t << y;
    y = timeseries::invert(*model.target_scaler, t)(0);
  }
  return y;
}

template <typename Scalar>
VectorX<Scalar> predict(const SvrModel<Scalar>& model,
                        const MatrixX<Scalar>& rows) {
  VectorX<Scalar> out(rows.rows());
  for (Index i = 0; i < rows.rows(); ++i)
    out(i) = predict(model, VectorX<Scalar>(rows.row(i).transpose()));
  return out;
}

/// Dual objective -1/2 b'Kb + y'b - eps * ||b||_1 evaluated at the model's
/// coefficients; oracle instrumentation for the solver tests.
template <typename Scalar>
Scalar dual_objective(const SvrModel<Scalar>& model,
                      const MatrixX<Scalar>& rows,
                      const VectorX<Scalar>& targets) {
  (void)rows;
  const Index m = model.support_vectors.rows();
  if (m == 0) return Scalar(0);
  const MatrixX<Scalar> k =
      gram_matrix<Scalar>(model.support_vectors, model.hyperparams.gamma);
  const VectorX<Scalar>& b = model.dual_coefficients;
  Scalar y_term = 0;
  for (Index s = 0; s < m; ++s)
    y_term += targets(model.support_indices[static_cast<size_t>(s)]) * b(s);
  return -Scalar(0.5) * b.dot(k * b) + y_term -
         model.hyperparams.epsilon * b.template lpNorm<1>();
}

/// Fits min-max scalers on the given rows/targets, trains on the scaled
/// problem, and attaches the scalers so predict() works in raw units.
template <typename Scalar>
SvrModel<Scalar> fit_scaled(const MatrixX<Scalar>& raw_rows,
                            const VectorX<Scalar>& raw_targets,
                            const Hyperparams<Scalar>& hp,
                            const TrainConfig& config = {}) {
  auto fs = timeseries::fit_scaler(raw_rows);
  auto ts = timeseries::fit_scaler(
      MatrixX<Scalar>(raw_targets.reshaped(raw_targets.size(), 1)));
  MatrixX<Scalar> scaled_rows = timeseries::apply_rows(fs, raw_rows);
  VectorX<Scalar> scaled_targets(raw_targets.size());
  for (Index i = 0; i < raw_targets.size(); ++i) {
    VectorX<Scalar> t(1);
    t << raw_targets(i);
    scaled_targets(i) = timeseries::apply(ts, t)(0);
  }
  auto model = train(scaled_rows, scaled_targets, hp, config);
  model.feature_scaler = fs;
  model.target_scaler = ts;
  return model;
}

template <typename Scalar>
struct GridSpec {
  std::vector<Scalar> c_candidates = {Scalar(0.1), Scalar(1), Scalar(10),
                                      Scalar(100), Scalar(1000)};
  std::vector<Scalar> gamma_candidates = {Scalar(1e-3), Scalar(1e-2),
                                          Scalar(1e-1), Scalar(1), Scalar(10)};
  int cv_folds = 3;
};

template <typename Scalar>
struct GridSearchResult {
  Hyperparams<Scalar> best;
  MatrixX<Scalar> scores;  // c (rows) x gamma (cols): mean validation MAPE
};

/// Expanding-window cross-validation: the training span is cut into
/// cv_folds + 1 contiguous segments; fold j trains on segments [0, j) and
/// validates on segment j, so validation data is always later in time.
/// Scalers are refit per fold on the fold's training rows only. Scores are
/// MAPE in raw target units; ties keep the earlier grid cell.
template <typename Scalar>
GridSearchResult<Scalar> grid_search(const MatrixX<Scalar>& raw_rows,
                                     const VectorX<Scalar>& raw_targets,
                                     const GridSpec<Scalar>& grid,
                                     Scalar epsilon,
                                     const TrainConfig& config = {}) {
  if (grid.c_candidates.empty() || grid.gamma_candidates.empty())
    throw Error("grid_search: empty candidate grid");
  if (grid.cv_folds < 2) throw Error("grid_search: need >= 2 folds");
  const Index m = raw_rows.rows();
  const Index k = Index(grid.cv_folds);
  if (m < k + 1)
    throw Error("grid_search: fold scheme infeasible for " +
                std::to_string(m) + " rows");

  std::vector<Index> bounds(static_cast<size_t>(k) + 2);
  for (Index j = 0; j <= k + 1; ++j)
    bounds[static_cast<size_t>(j)] = m * j / (k + 1);

  GridSearchResult<Scalar> result;
  result.scores.resize(Index(grid.c_candidates.size()),
                       Index(grid.gamma_candidates.size()));
  Scalar best_score = std::numeric_limits<Scalar>::infinity();
  for (size_t ci = 0; ci < grid.c_candidates.size(); ++ci) {
    for (size_t gi = 0; gi < grid.gamma_candidates.size(); ++gi) {
      Hyperparams<Scalar> hp{grid.c_candidates[ci], grid.gamma_candidates[gi],
                             epsilon};
      Scalar score_sum = 0;
      for (Index j = 1; j <= k; ++j) {
        const Index train_end = bounds[static_cast<size_t>(j)];
        const Index val_end = bounds[static_cast<size_t>(j + 1)];
        auto model = fit_scaled<Scalar>(raw_rows.topRows(train_end),
                                        raw_targets.head(train_end), hp,
                                        config);
        VectorX<Scalar> pred(val_end - train_end);
        for (Index t = train_end; t < val_end; ++t)
          pred(t - train_end) =
              predict(model, VectorX<Scalar>(raw_rows.row(t).transpose()));
        score_sum += mape(raw_targets.segment(train_end, val_end - train_end),
                          pred);
      }
      const Scalar score = score_sum / Scalar(k);
      result.scores(Index(ci), Index(gi)) = score;
      if (score < best_score) {
        best_score = score;
        result.best = hp;
      }
    }
  }
  return result;
}

}  // namespace eequake::svr

#endif  // EEQUAKE_SVR_HPP
