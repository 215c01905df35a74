#include <doctest.h>

#include <random>

#include "eequake/emd.hpp"
#include "helpers.hpp"

using namespace eequake;
using namespace eequake::emd;
using helpers::VectorX;

namespace {

VectorX<double> smooth_random_signal(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * helpers::kPi);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  return helpers::sine(n, 5.0, amp(rng), phase(rng)) +
         helpers::sine(n, 13.0, amp(rng), phase(rng)) +
         helpers::sine(n, 29.0, amp(rng), phase(rng));
}

double correlation(const VectorX<double>& a, const VectorX<double>& b) {
  const VectorX<double> ac = (a.array() - a.mean()).matrix();
  const VectorX<double> bc = (b.array() - b.mean()).matrix();
  return ac.dot(bc) / (ac.norm() * bc.norm());
}

double mean_zero_crossing_spacing(const VectorX<double>& x) {
  std::vector<Index> crossings;
  for (Index i = 1; i < x.size(); ++i)
    if ((x(i - 1) >= 0) != (x(i) >= 0)) crossings.push_back(i);
  REQUIRE(crossings.size() >= 2);
  return double(crossings.back() - crossings.front()) /
         double(crossings.size() - 1);
}

}  // namespace

TEST_CASE("find_extrema on monotone and oscillating inputs") {
  CHECK(find_extrema(VectorX<double>(
            VectorX<double>::LinSpaced(32, 0.0, 1.0))).maxima.empty());
  CHECK(find_extrema(VectorX<double>(
            VectorX<double>::LinSpaced(32, 0.0, 1.0))).minima.empty());

  const auto ex = find_extrema(helpers::sine(512, 4.0));
  REQUIRE(ex.maxima.size() == 4);
  REQUIRE(ex.minima.size() == 4);
  // alternating: every max sits between two minima (up to the record ends)
  for (size_t k = 0; k + 1 < ex.maxima.size(); ++k)
    CHECK(ex.minima[k] > ex.maxima[k]);
}

TEST_CASE("find_extrema gives the plateau midpoint once") {
  VectorX<double> x(5);
  x << 0, 1, 1, 1, 0;
  const auto ex = find_extrema(x);
  REQUIRE(ex.maxima.size() == 1);
  CHECK(ex.maxima[0] == 2);
  CHECK(ex.minima.empty());
}

TEST_CASE("envelopes hug a pure sine at +-1 over the interior") {
  const Index n = 512;
  const VectorX<double> x = helpers::sine(n, 8.0);
  const auto env = envelopes(x, find_extrema(x), Boundary::Mirror);
  REQUIRE(env.has_value());
  const Index lo = n / 10, hi = n - n / 10;
  for (Index i = lo; i < hi; ++i) {
    CHECK(std::abs(env->upper(i) - 1.0) < 0.05);
    CHECK(std::abs(env->lower(i) + 1.0) < 0.05);
  }
}

TEST_CASE("upper envelope dominates the lower on random smooth signals") {
  for (unsigned seed = 0; seed < 12; ++seed) {
    const VectorX<double> x = smooth_random_signal(512, 100 + seed);
    const auto env = envelopes(x, find_extrema(x), Boundary::Mirror);
    REQUIRE(env.has_value());
    for (Index i = 512 / 10; i < 512 - 512 / 10; ++i)
      CHECK(env->upper(i) >= env->lower(i));
  }
}

TEST_CASE("envelopes signal too-few-extrema instead of failing") {
  VectorX<double> x(16);
  for (Index i = 0; i < 16; ++i) {
    const double t = double(i) / 15.0;
    x(i) = t * (1.0 - t);  // single hump: one maximum, no minima
  }
  CHECK(!envelopes(x, find_extrema(x), Boundary::Mirror).has_value());
}

TEST_CASE("sift_once leaves a symmetric signal nearly unchanged") {
  const VectorX<double> x = helpers::sine(512, 8.0);
  const auto sifted = sift_once(x, SiftConfig{});
  REQUIRE(sifted.has_value());
  CHECK((*sifted - x).lpNorm<Eigen::Infinity>() < 0.06);
}

TEST_CASE("sift_once shrinks a constant offset") {
  const VectorX<double> x =
      helpers::sine(512, 8.0) + VectorX<double>::Constant(512, 2.0);
  const auto sifted = sift_once(x, SiftConfig{});
  REQUIRE(sifted.has_value());
  CHECK(std::abs(sifted->mean()) < std::abs(x.mean()) / 4);
}

TEST_CASE("sift_once on a zero vector signals too-few-extrema") {
  CHECK(!sift_once(VectorX<double>(VectorX<double>::Zero(64)), SiftConfig{})
             .has_value());
}

TEST_CASE("extract_imf recovers a single tone") {
  const VectorX<double> x = helpers::sine(512, 8.0);
  const auto imf = extract_imf(x, SiftConfig{});
  REQUIRE(imf.has_value());
  CHECK(correlation(imf->values, x) >= 0.99);
}

TEST_CASE("extract_imf isolates the fast tone of a ratio-8 pair") {
  const VectorX<double> x =
      helpers::sine(1024, 16.0) + helpers::sine(1024, 2.0, 0.5);
  const auto imf = extract_imf(x, SiftConfig{});
  REQUIRE(imf.has_value());
  const double fast_zc = double(count_zero_crossings(helpers::sine(1024, 16.0)));
  const double imf_zc = double(count_zero_crossings(imf->values));
  CHECK(std::abs(imf_zc - fast_zc) <= 0.05 * fast_zc);
}

TEST_CASE("extract_imf refuses a monotone ramp") {
  CHECK(!extract_imf(VectorX<double>(VectorX<double>::LinSpaced(64, 0.0, 1.0)),
                     SiftConfig{})
             .has_value());
}

TEST_CASE("decompose: monotone ramp is pure residue") {
  const VectorX<double> ramp = VectorX<double>::LinSpaced(64, 0.0, 10.0);
  const auto d = decompose(ramp);
  CHECK(d.imfs.empty());
  CHECK((d.residue - ramp).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("decompose separates a ratio-8 two-tone signal") {
  const VectorX<double> x =
      helpers::sine(1024, 8.0) + helpers::sine(1024, 1.0, 0.5);
  const auto d = decompose(x);
  REQUIRE(d.imfs.size() >= 2);
  const double f1 = helpers::zero_crossing_cycles(d.imfs[0].values);
  const double f2 = helpers::zero_crossing_cycles(d.imfs[1].values);
  CHECK(std::abs(f1 - 8.0) <= 0.8);
  CHECK(std::abs(f2 - 1.0) <= 0.1);

  // Mode ordering: faster modes first.
  CHECK(mean_zero_crossing_spacing(d.imfs[0].values) <
        mean_zero_crossing_spacing(d.imfs[1].values));
}

TEST_CASE("decompose reconstructs random signals to 1e-10 of range") {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const VectorX<double> x = helpers::gaussian_noise(512, 9000 + seed);
    const auto d = decompose(x);
    const double range = x.maxCoeff() - x.minCoeff();
    CHECK((d.reconstruct() - x).lpNorm<Eigen::Infinity>() < 1e-10 * range);
    CHECK(int(d.imfs.size()) <= default_max_imfs(512));
    for (const auto& imf : d.imfs) {
      if (!imf.converged) continue;
      const auto ex = find_extrema(imf.values);
      const Index n_ext = Index(ex.maxima.size() + ex.minima.size());
      CHECK(std::abs(n_ext - count_zero_crossings(imf.values)) <= 1);
    }
  }
}

TEST_CASE("decompose rejects bad inputs") {
  CHECK_THROWS_AS(decompose(VectorX<double>(VectorX<double>::Zero(4))), Error);
  VectorX<double> bad = VectorX<double>::Zero(64);
  bad(10) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(decompose(bad), Error);
}

TEST_CASE("clamp boundary mode also produces valid envelopes") {
  const VectorX<double> x = helpers::sine(256, 6.0);
  SiftConfig config;
  config.boundary = Boundary::Clamp;
  const auto d = decompose(x, config);
  REQUIRE(!d.imfs.empty());
  const double range = x.maxCoeff() - x.minCoeff();
  CHECK((d.reconstruct() - x).lpNorm<Eigen::Infinity>() < 1e-10 * range);
}
