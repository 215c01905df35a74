#ifndef EEQUAKE_EMD_HPP
#define EEQUAKE_EMD_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "eequake/common.hpp"
#include "eequake/spline.hpp"

namespace eequake::emd {

enum class Boundary { Mirror, Clamp };

struct SiftConfig {
  double sd_threshold = 0.2;        // Cauchy stop: sum(prev-cur)^2 / sum(prev^2)
  int max_sift_iterations = 100;
  int max_imfs = 0;                 // 0 = ceil(log2 n) + 2
  Boundary boundary = Boundary::Mirror;
  double envelope_tolerance = 0.05; // |mean envelope| < tol * range(candidate)
};

struct Extrema {
  std::vector<Index> maxima;
  std::vector<Index> minima;
};

/// Strict interior local extrema; a flat plateau counts once, at its midpoint.
template <typename Scalar>
Extrema find_extrema(const VectorX<Scalar>& signal) {
  Extrema ex;
  const Index n = signal.size();
  if (n < 3) return ex;
  Index i = 1;
  while (i < n - 1) {
    if (signal(i) > signal(i - 1)) {
      const Index start = i;
      while (i < n - 1 && signal(i) == signal(i + 1)) ++i;
      if (i < n - 1 && signal(i) > signal(i + 1))
        ex.maxima.push_back((start + i) / 2);
    } else if (signal(i) < signal(i - 1)) {
      const Index start = i;
      while (i < n - 1 && signal(i) == signal(i + 1)) ++i;
      if (i < n - 1 && signal(i) < signal(i + 1))
        ex.minima.push_back((start + i) / 2);
    }
    ++i;
  }
  return ex;
}

template <typename Scalar>
Index count_zero_crossings(const VectorX<Scalar>& signal) {
  Index count = 0;
  for (Index i = 1; i < signal.size(); ++i) {
    const bool prev = signal(i - 1) >= Scalar(0);
    const bool cur = signal(i) >= Scalar(0);
    count += (prev != cur);
  }
  return count;
}

template <typename Scalar>
struct EnvelopePair {
  VectorX<Scalar> upper;
  VectorX<Scalar> lower;
};

namespace detail {

// Mirror: reflect the two extrema nearest each signal endpoint about it.
// Clamp: anchor the envelope to the signal's end samples.
template <typename Scalar>
void extend_knots(const std::vector<Index>& idx, const VectorX<Scalar>& signal,
                  Boundary boundary, VectorX<Scalar>& x, VectorX<Scalar>& y) {
  const Index m = static_cast<Index>(idx.size());
  const Index n = signal.size();
  std::vector<std::pair<Scalar, Scalar>> knots;
  knots.reserve(static_cast<size_t>(m) + 4);
  if (boundary == Boundary::Mirror) {
    const Index ext = std::min<Index>(2, m);
    for (Index k = ext; k >= 1; --k)
      knots.emplace_back(-Scalar(idx[static_cast<size_t>(k - 1)]),
                         signal(idx[static_cast<size_t>(k - 1)]));
    for (Index k = 0; k < m; ++k)
      knots.emplace_back(Scalar(idx[static_cast<size_t>(k)]),
                         signal(idx[static_cast<size_t>(k)]));
    for (Index k = 1; k <= ext; ++k)
      knots.emplace_back(Scalar(2 * (n - 1) - idx[static_cast<size_t>(m - k)]),
                         signal(idx[static_cast<size_t>(m - k)]));
  } else {
    knots.emplace_back(Scalar(0), signal(0));
    for (Index k = 0; k < m; ++k)
      knots.emplace_back(Scalar(idx[static_cast<size_t>(k)]),
                         signal(idx[static_cast<size_t>(k)]));
    knots.emplace_back(Scalar(n - 1), signal(n - 1));
  }
  x.resize(static_cast<Index>(knots.size()));
  y.resize(static_cast<Index>(knots.size()));
  for (Index k = 0; k < x.size(); ++k) {
    x(k) = knots[static_cast<size_t>(k)].first;
    y(k) = knots[static_cast<size_t>(k)].second;
  }
}

template <typename Scalar>
VectorX<Scalar> grid(Index n) {
  return VectorX<Scalar>::LinSpaced(n, Scalar(0), Scalar(n - 1));
}

}  // namespace detail

/// Cubic-spline envelopes through the extrema, evaluated on the full grid.
/// Returns nullopt when there are fewer than 2 maxima or 2 minima, which
/// signals that sifting must stop (residue-like signal), not a failure.
template <typename Scalar>
std::optional<EnvelopePair<Scalar>> envelopes(const VectorX<Scalar>& signal,
                                              const Extrema& extrema,
                                              Boundary boundary) {
  if (extrema.maxima.size() < 2 || extrema.minima.size() < 2)
    return std::nullopt;
  VectorX<Scalar> xs, ys;
  const VectorX<Scalar> t = detail::grid<Scalar>(signal.size());
  EnvelopePair<Scalar> env;
  detail::extend_knots(extrema.maxima, signal, boundary, xs, ys);
  env.upper = NaturalCubicSpline<Scalar>(xs, ys).evaluate(t);
  detail::extend_knots(extrema.minima, signal, boundary, xs, ys);
  env.lower = NaturalCubicSpline<Scalar>(xs, ys).evaluate(t);
  return env;
}

/// One sifting pass: subtract the envelope midpoint (UE + LE) / 2.
template <typename Scalar>
std::optional<VectorX<Scalar>> sift_once(const VectorX<Scalar>& signal,
                                         const SiftConfig& config) {
  auto env = envelopes(signal, find_extrema(signal), config.boundary);
  if (!env) return std::nullopt;
  return signal - ((env->upper + env->lower) / Scalar(2)).eval();
}

template <typename Scalar>
struct Imf {
  VectorX<Scalar> values;
  int index = 1;          // 1-based mode number, fastest first
  bool converged = true;  // false if the iteration cap hit before the criteria
};

namespace detail {

template <typename Scalar>
bool extrema_criterion(const VectorX<Scalar>& v) {
  const Extrema ex = find_extrema(v);
  const Index n_ext = static_cast<Index>(ex.maxima.size() + ex.minima.size());
  return std::abs(n_ext - count_zero_crossings(v)) <= 1;
}

template <typename Scalar>
bool envelope_criterion(const VectorX<Scalar>& v, const EnvelopePair<Scalar>& env,
                        Scalar tolerance) {
  const VectorX<Scalar> mean = (env.upper + env.lower) / Scalar(2);
  const Scalar range = v.maxCoeff() - v.minCoeff();
  return mean.template lpNorm<Eigen::Infinity>() < tolerance * range;
}

}  // namespace detail

/// Sifts until the Cauchy criterion and both IMF criteria hold, or the
/// iteration cap is reached (candidate returned with converged = false).
template <typename Scalar>
std::optional<Imf<Scalar>> extract_imf(const VectorX<Scalar>& signal,
                                       const SiftConfig& config) {
  VectorX<Scalar> current = signal;
  Imf<Scalar> imf;
  imf.converged = false;
  for (int iter = 0; iter < config.max_sift_iterations; ++iter) {
    auto env = envelopes(current, find_extrema(current), config.boundary);
    if (!env) {
      if (iter == 0) return std::nullopt;  // residue-like from the start
      break;  // over-sifted into a monotone remainder; keep last candidate
    }
    const VectorX<Scalar> mean = (env->upper + env->lower) / Scalar(2);
    const VectorX<Scalar> next = current - mean;
    const Scalar denom = current.squaredNorm();
    const Scalar sd = denom > Scalar(0)
                          ? (current - next).squaredNorm() / denom
                          : Scalar(0);
    current = next;
    if (sd < Scalar(config.sd_threshold) &&
        detail::extrema_criterion(current)) {
      auto env2 = envelopes(current, find_extrema(current), config.boundary);
      if (env2 && detail::envelope_criterion(current, *env2,
                                             Scalar(config.envelope_tolerance))) {
        imf.converged = true;
        break;
      }
      if (!env2) break;
    }
  }
  imf.values = std::move(current);
  return imf;
}

template <typename Scalar>
struct Decomposition {
  std::vector<Imf<Scalar>> imfs;
  VectorX<Scalar> residue;
  Index input_length = 0;

  VectorX<Scalar> reconstruct() const {
    VectorX<Scalar> sum = residue;
    for (const auto& imf : imfs) sum += imf.values;
    return sum;
  }
};

namespace detail {

template <typename Scalar>
bool is_residue(const VectorX<Scalar>& v) {
  const Extrema ex = find_extrema(v);
  return ex.maxima.size() + ex.minima.size() < 2;
}

}  // namespace detail

inline int default_max_imfs(Index n) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 2;
}

/// Full sifting cascade: peel IMFs off the running remainder until it is
/// monotonic within tolerance (< 2 interior extrema) or the cap is reached.
template <typename Scalar>
Decomposition<Scalar> decompose(const VectorX<Scalar>& signal,
                                const SiftConfig& config = {}) {
  const Index n = signal.size();
  if (n < 8) throw Error("decompose: input too short (need >= 8 samples)");
  if (!signal.allFinite()) throw Error("decompose: non-finite values in input");

  const int cap = config.max_imfs > 0 ? config.max_imfs : default_max_imfs(n);
  Decomposition<Scalar> out;
  out.input_length = n;
  VectorX<Scalar> remainder = signal;
  while (static_cast<int>(out.imfs.size()) < cap &&
         !detail::is_residue(remainder)) {
    auto imf = extract_imf(remainder, config);
    if (!imf) break;
    imf->index = static_cast<int>(out.imfs.size()) + 1;
    remainder -= imf->values;
    out.imfs.push_back(std::move(*imf));
  }
  out.residue = std::move(remainder);
  return out;
}

}  // namespace eequake::emd

#endif  // EEQUAKE_EMD_HPP
