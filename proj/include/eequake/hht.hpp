#ifndef EEQUAKE_HHT_HPP
#define EEQUAKE_HHT_HPP

#include <Eigen/SparseCore>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "eequake/common.hpp"
#include "eequake/emd.hpp"

namespace eequake::hht {

/// Per-bar instantaneous attributes of one IMF. Frequencies are angular,
/// in radians per bar, clamped to [0, pi].
template <typename Scalar>
struct AnalyticSignal {
  VectorX<Scalar> amplitude;
  VectorX<Scalar> phase;      // unwrapped
  VectorX<Scalar> frequency;
};

/// Frequency-domain analytic signal: negative frequencies zeroed, positive
/// doubled; instantaneous frequency from a centered difference of the
/// unwrapped phase (one-sided at the ends).
template <typename Scalar>
AnalyticSignal<Scalar> analytic_signal(const VectorX<Scalar>& imf) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Index n = imf.size();
  if (n < 8) throw Error("analytic_signal: input too short (need >= 8)");
  if (!imf.allFinite()) throw Error("analytic_signal: non-finite input");

  std::vector<Scalar> time(imf.data(), imf.data() + n);
  std::vector<std::complex<Scalar>> freq;
  Eigen::FFT<Scalar> fft;
  fft.fwd(freq, time);

  const Index half = n / 2;
  for (Index k = 1; k < half + (n % 2 ? 1 : 0); ++k)
    freq[static_cast<size_t>(k)] *= Scalar(2);
  for (Index k = half + 1; k < n; ++k)
    freq[static_cast<size_t>(k)] = std::complex<Scalar>(0, 0);

  std::vector<std::complex<Scalar>> analytic;
  fft.inv(analytic, freq);

  AnalyticSignal<Scalar> out;
  out.amplitude.resize(n);
  out.phase.resize(n);
  out.frequency.resize(n);

  Scalar prev_raw = 0, offset = 0;
  for (Index i = 0; i < n; ++i) {
    const auto& z = analytic[static_cast<size_t>(i)];
    out.amplitude(i) = std::abs(z);
    const Scalar raw = std::atan2(z.imag(), z.real());
    if (i == 0) {
      out.phase(i) = raw;
    } else {
      Scalar d = raw - prev_raw;
      while (d > pi) { d -= 2 * pi; offset -= 2 * pi; }
      while (d < -pi) { d += 2 * pi; offset += 2 * pi; }
      out.phase(i) = raw + offset;
    }
    prev_raw = raw;
  }

  auto clamp01pi = [pi](Scalar w) {
    return std::min(std::max(w, Scalar(0)), pi);
  };
  if (n >= 2) {
    out.frequency(0) = clamp01pi(out.phase(1) - out.phase(0));
    out.frequency(n - 1) = clamp01pi(out.phase(n - 1) - out.phase(n - 2));
  }
  for (Index i = 1; i < n - 1; ++i)
    out.frequency(i) = clamp01pi((out.phase(i + 1) - out.phase(i - 1)) / Scalar(2));
  return out;
}

/// Sparse time-frequency amplitude distribution over bins covering [0, pi].
template <typename Scalar>
struct HilbertSpectrum {
  Index time_bins = 0;
  Index freq_bins = 0;
  Scalar delta_omega = 0;
  Eigen::SparseMatrix<Scalar> cells;  // time x frequency, amplitudes add

  Scalar bin_center(Index b) const {
    return (Scalar(b) + Scalar(0.5)) * delta_omega;
  }
};

namespace detail {

template <typename Scalar>
std::vector<const emd::Imf<Scalar>*> select_imfs(
    const emd::Decomposition<Scalar>& decomposition,
    const std::vector<int>& imf_subset) {
  std::vector<const emd::Imf<Scalar>*> chosen;
  if (imf_subset.empty()) {
    for (const auto& imf : decomposition.imfs) chosen.push_back(&imf);
  } else {
    for (int idx : imf_subset) {
      if (idx < 1 || idx > static_cast<int>(decomposition.imfs.size()))
        throw Error("imf subset index out of range: " + std::to_string(idx));
      chosen.push_back(&decomposition.imfs[static_cast<size_t>(idx - 1)]);
    }
  }
  return chosen;
}

}  // namespace detail

/// Deposits each IMF's amplitude into the frequency bin holding its
/// instantaneous frequency, one cell per bar. The residue never contributes.
template <typename Scalar>
HilbertSpectrum<Scalar> spectrum(const emd::Decomposition<Scalar>& decomposition,
                                 Index n_freq_bins = 128,
                                 const std::vector<int>& imf_subset = {}) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  if (decomposition.imfs.empty())
    throw Error("spectrum: decomposition has no IMFs");
  if (n_freq_bins < 8) throw Error("spectrum: need >= 8 frequency bins");

  HilbertSpectrum<Scalar> hs;
  hs.time_bins = decomposition.input_length;
  hs.freq_bins = n_freq_bins;
  hs.delta_omega = pi / Scalar(n_freq_bins);

  std::vector<Eigen::Triplet<Scalar>> cells;
  for (const auto* imf : detail::select_imfs(decomposition, imf_subset)) {
    const auto sig = analytic_signal(imf->values);
    for (Index t = 0; t < hs.time_bins; ++t) {
      if (!(sig.amplitude(t) > Scalar(0))) continue;
      const Index b = std::min<Index>(
          static_cast<Index>(sig.frequency(t) / hs.delta_omega),
          n_freq_bins - 1);
      cells.emplace_back(static_cast<int>(t), static_cast<int>(b),
                         sig.amplitude(t));
    }
  }
  hs.cells.resize(hs.time_bins, hs.freq_bins);
  hs.cells.setFromTriplets(cells.begin(), cells.end());
  return hs;
}

/// Marginal spectrum h(w) = (1/T) sum_t H(t, w), one value per bin.
template <typename Scalar>
VectorX<Scalar> marginal(const HilbertSpectrum<Scalar>& hs) {
  if (hs.time_bins == 0) throw Error("marginal: empty spectrum");
  VectorX<Scalar> h = VectorX<Scalar>::Zero(hs.freq_bins);
  for (Index k = 0; k < hs.cells.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(hs.cells, k);
         it; ++it)
      h(it.col()) += it.value();
  return h / Scalar(hs.time_bins);
}

/// Instantaneous energy IE(t) with its normalized form and moments.
/// The mean and (population) standard deviation are of the raw IE.
template <typename Scalar>
struct EnergySeries {
  VectorX<Scalar> ie;
  VectorX<Scalar> ie_norm;
  Scalar mean = 0;
  Scalar stdev = 0;
};

/// IE(t) = sum_i M_i(t)^2 over the given per-IMF analytic signals; the exact
/// discrete value of the squared-spectrum integral when each IMF deposits a
/// single cell per bar.
template <typename Scalar>
EnergySeries<Scalar> instantaneous_energy(
    const std::vector<AnalyticSignal<Scalar>>& signals) {
  if (signals.empty()) throw Error("instantaneous_energy: no IMFs");
  const Index n = signals.front().amplitude.size();
  EnergySeries<Scalar> es;
  es.ie = VectorX<Scalar>::Zero(n);
  for (const auto& sig : signals) {
    if (sig.amplitude.size() != n)
      throw Error("instantaneous_energy: mismatched IMF lengths");
    es.ie += sig.amplitude.array().square().matrix();
  }
  const Scalar max = es.ie.maxCoeff();
  if (!(max > Scalar(0)))
    throw Error("instantaneous_energy: max IE is zero, cannot normalize");
  es.ie_norm = es.ie / max;
  es.mean = es.ie.mean();
  es.stdev = std::sqrt((es.ie.array() - es.mean).square().mean());
  return es;
}

template <typename Scalar>
EnergySeries<Scalar> instantaneous_energy(
    const emd::Decomposition<Scalar>& decomposition,
    const std::vector<int>& imf_subset = {}) {
  std::vector<AnalyticSignal<Scalar>> signals;
  for (const auto* imf : detail::select_imfs(decomposition, imf_subset))
    signals.push_back(analytic_signal(imf->values));
  if (signals.empty()) throw Error("instantaneous_energy: no IMFs");
  return instantaneous_energy(signals);
}

}  // namespace eequake::hht

#endif  // EEQUAKE_HHT_HPP
