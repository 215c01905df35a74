#ifndef EEQUAKE_DETECTOR_HPP
#define EEQUAKE_DETECTOR_HPP

#include <cmath>
#include <string>
#include <vector>

#include "eequake/common.hpp"
#include "eequake/hht.hpp"
#include "eequake/timeseries.hpp"

namespace eequake::detector {

enum class EnergyScale { Raw, Normalized };

/// E_th = E_mu + b * sigma on the selected scale. Detection on either scale
/// yields the same event set; normalized is the default.
template <typename Scalar>
struct Threshold {
  Scalar b = 4;
  Scalar e_mu = 0;
  Scalar sigma = 0;
  Scalar e_th = 0;
  EnergyScale scale = EnergyScale::Normalized;
  bool degenerate = false;  // sigma == 0 (constant energy); detects nothing
};

template <typename Scalar>
Threshold<Scalar> threshold(const hht::EnergySeries<Scalar>& energy,
                            Scalar b = Scalar(4),
                            EnergyScale scale = EnergyScale::Normalized) {
  if (energy.ie.size() == 0) throw Error("threshold: empty energy series");
  Threshold<Scalar> th;
  th.b = b;
  th.scale = scale;
  if (scale == EnergyScale::Raw) {
    th.e_mu = energy.mean;
    th.sigma = energy.stdev;
  } else {
    th.e_mu = energy.ie_norm.mean();
    th.sigma = std::sqrt((energy.ie_norm.array() - th.e_mu).square().mean());
  }
  th.e_th = th.e_mu + b * th.sigma;
  th.degenerate = !(th.sigma > Scalar(0));
  return th;
}

enum class Polarity { Positive, Negative, Undetermined };

inline const char* to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "positive";
    case Polarity::Negative: return "negative";
    default: return "undetermined";
  }
}

template <typename Scalar>
struct ExtremeEvent {
  Index start = 0;  // inclusive bar span
  Index peak = 0;
  Index end = 0;
  Scalar peak_energy_norm = 0;
  Polarity polarity = Polarity::Undetermined;
  Scalar ratio = 0;  // (max IE over event - E_mu) / sigma, raw scale
};

struct DetectConfig {
  Index min_gap = 2;  // events separated by fewer bars merge
};

/// Maximal runs of bars with energy above E_th, merged across sub-min_gap
/// gaps. Peak is the earliest argmax within the run.
template <typename Scalar>
std::vector<ExtremeEvent<Scalar>> detect(const hht::EnergySeries<Scalar>& energy,
                                         const Threshold<Scalar>& th,
                                         const DetectConfig& config = {}) {
  std::vector<ExtremeEvent<Scalar>> events;
  if (th.degenerate) return events;
  const VectorX<Scalar>& values =
      th.scale == EnergyScale::Raw ? energy.ie : energy.ie_norm;
  const Index n = values.size();

  std::vector<std::pair<Index, Index>> runs;
  Index i = 0;
  while (i < n) {
    if (values(i) > th.e_th) {
      Index j = i;
      while (j + 1 < n && values(j + 1) > th.e_th) ++j;
      if (!runs.empty() && i - runs.back().second - 1 < config.min_gap)
        runs.back().second = j;
      else
        runs.emplace_back(i, j);
      i = j + 1;
    } else {
      ++i;
    }
  }

  for (const auto& [start, end] : runs) {
    ExtremeEvent<Scalar> ev;
    ev.start = start;
    ev.end = end;
    ev.peak = start;
    for (Index t = start + 1; t <= end; ++t)
      if (energy.ie(t) > energy.ie(ev.peak)) ev.peak = t;
    ev.peak_energy_norm = energy.ie_norm(ev.peak);
    ev.ratio = energy.stdev > Scalar(0)
                   ? (energy.ie(ev.peak) - energy.mean) / energy.stdev
                   : Scalar(0);
    events.push_back(ev);
  }
  return events;
}

/// Compares mean close after the peak against mean close before it, clipped
/// at the series ends; a relative difference under 0.1% is undetermined.
template <typename Scalar>
Polarity classify_polarity(const timeseries::PriceSeries& series,
                           const ExtremeEvent<Scalar>& event,
                           Index window = 3) {
  if (window < 1) throw Error("classify_polarity: window must be >= 1");
  const Index n = series.size();
  if (event.peak < 0 || event.peak >= n)
    throw Error("classify_polarity: event outside series");
  const Index pre_lo = std::max<Index>(0, event.peak - window);
  const Index pre_hi = event.peak - 1;
  const Index post_lo = event.peak + 1;
  const Index post_hi = std::min<Index>(n - 1, event.peak + window);
  if (pre_hi < pre_lo || post_hi < post_lo)
    throw Error("classify_polarity: event at series boundary has no pre or post bars");

  auto mean_close = [&](Index lo, Index hi) {
    double sum = 0;
    for (Index t = lo; t <= hi; ++t) sum += series.bars[static_cast<size_t>(t)].close;
    return sum / static_cast<double>(hi - lo + 1);
  };
  const double before = mean_close(pre_lo, pre_hi);
  const double after = mean_close(post_lo, post_hi);
  if (std::abs(after - before) < 1e-3 * std::abs(before))
    return Polarity::Undetermined;
  return after > before ? Polarity::Positive : Polarity::Negative;
}

/// Severity statistic (max IE - E_mu) / sigma; invariant under positive
/// scaling of the energy series.
template <typename Scalar>
Scalar energy_ratio(const hht::EnergySeries<Scalar>& energy) {
  if (!(energy.stdev > Scalar(0)))
    throw Error("energy_ratio: zero energy standard deviation");
  return (energy.ie.maxCoeff() - energy.mean) / energy.stdev;
}

template <typename Scalar>
struct DetectionReport {
  std::vector<ExtremeEvent<Scalar>> events;  // disjoint, ordered by start
  Threshold<Scalar> threshold;
  std::string series_id;
};

}  // namespace eequake::detector

#endif  // EEQUAKE_DETECTOR_HPP
