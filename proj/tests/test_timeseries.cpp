#include <doctest.h>

#include <random>
#include <sstream>

#include "eequake/timeseries.hpp"
#include "helpers.hpp"

using namespace eequake;
using namespace eequake::timeseries;

namespace {

PriceSeries parse(const std::string& text, const CsvSchema& schema = {},
                  ParseStats* stats = nullptr) {
  std::istringstream in(text);
  return parse_csv(in, schema, "daily", stats);
}

}  // namespace

TEST_CASE("parse_csv builds an ascending series from well-formed rows") {
  const auto s = parse(
      "Date,Open,High,Low,Close,Adj Close,Volume\n"
      "2021-05-12,10,12,9,11,11,100\n"
      "2021-05-10,10,11,9,10,10,200\n"
      "2021-05-11,10,13,10,12,12,\n");
  REQUIRE(s.size() == 3);
  CHECK(s.bars[0].timestamp == "2021-05-10");
  CHECK(s.bars[1].timestamp == "2021-05-11");
  CHECK(s.bars[2].timestamp == "2021-05-12");
  CHECK(s.bars[0].close == 10);
  CHECK(s.bars[2].close == 11);
  CHECK(s.bars[0].volume.has_value());
  CHECK(!s.bars[1].volume.has_value());
  for (const auto& bar : s.bars) {
    CHECK(bar.low <= std::min(bar.open, bar.close));
    CHECK(bar.high >= std::max(bar.open, bar.close));
  }
}

TEST_CASE("parse_csv reports the missing column by name") {
  CHECK_THROWS_WITH_AS(
      parse("Date,Open,High,Low,Volume\n2021-01-01,1,2,1,5\n"),
      doctest::Contains("\"Close\""), Error);
}

TEST_CASE("parse_csv rejects a bar with high < low, citing the row") {
  CHECK_THROWS_WITH_AS(
      parse("Date,Open,High,Low,Close\n"
            "2021-01-01,10,11,9,10\n"
            "2021-01-02,10,8,9,8.5\n"),
      doctest::Contains("row 2"), Error);
}

TEST_CASE("parse_csv rejects duplicate timestamps and short files") {
  CHECK_THROWS_WITH_AS(parse("Date,Open,High,Low,Close\n"
                             "2021-01-01,1,2,1,1\n"
                             "2021-01-01,1,2,1,2\n"),
                       doctest::Contains("duplicate timestamp"), Error);
  CHECK_THROWS_WITH_AS(parse("Date,Open,High,Low,Close\n2021-01-01,1,2,1,1\n"),
                       doctest::Contains("fewer than 2"), Error);
}

TEST_CASE("parse_csv drops blank/NaN price rows with a count") {
  ParseStats stats;
  const auto s = parse(
      "Date,Open,High,Low,Close\n"
      "2021-01-01,1,2,1,1.5\n"
      "2021-01-02,null,null,null,null\n"
      "2021-01-03,,2,1,1.2\n"
      "2021-01-04,1,2,1,1.8\n",
      {}, &stats);
  CHECK(s.size() == 2);
  CHECK(stats.rows_dropped == 2);
}

TEST_CASE("parse_csv honors a schema map renaming Close") {
  CsvSchema schema;
  schema.close = "Adj Close";
  const auto s = parse(
      "Date,Open,High,Low,Close,Adj Close\n"
      "2021-01-01,10,12,9,11,10.5\n"
      "2021-01-02,10,12,9,11,10.7\n",
      schema);
  CHECK(s.bars[0].close == doctest::Approx(10.5));
}

TEST_CASE("to_features close-only layouts for both horizons") {
  PriceSeries s = helpers::series_from_closes(
      (VectorX<double>(4) << 1, 2, 3, 4).finished());

  const auto h1 = to_features(s, FeatureMode::CloseOnly, 1);
  REQUIRE(h1.rows.rows() == 3);
  REQUIRE(h1.rows.cols() == 1);
  CHECK(h1.rows(0, 0) == 1);
  CHECK(h1.rows(1, 0) == 2);
  CHECK(h1.rows(2, 0) == 3);
  CHECK(h1.targets(0) == 2);
  CHECK(h1.targets(1) == 3);
  CHECK(h1.targets(2) == 4);

  const auto h2 = to_features(s, FeatureMode::CloseOnly, 2);
  REQUIRE(h2.rows.rows() == 2);
  CHECK(h2.rows(0, 0) == 1);
  CHECK(h2.rows(1, 0) == 2);
  CHECK(h2.targets(0) == 3);
  CHECK(h2.targets(1) == 4);
}

TEST_CASE("to_features ohlc gives 4-dim rows") {
  PriceSeries s;
  for (int i = 0; i < 4; ++i) {
    PriceBar bar;
    bar.timestamp = "t" + std::to_string(i);
    bar.open = 10 + i;
    bar.high = 12 + i;
    bar.low = 9 + i;
    bar.close = 11 + i;
    s.bars.push_back(bar);
  }
  const auto fm = to_features(s, FeatureMode::Ohlc, 1);
  REQUIRE(fm.rows.rows() == 3);
  REQUIRE(fm.rows.cols() == 4);
  CHECK(fm.rows(0, 0) == 10);
  CHECK(fm.rows(0, 1) == 12);
  CHECK(fm.rows(0, 2) == 9);
  CHECK(fm.rows(0, 3) == 11);
  CHECK(fm.targets(2) == 14);
}

TEST_CASE("to_features row count property over horizons") {
  for (Index n : {3, 5, 17, 64}) {
    PriceSeries s = helpers::series_from_closes(
        VectorX<double>::LinSpaced(n, 1.0, double(n)));
    for (int h : {1, 2}) {
      const auto fm = to_features(s, FeatureMode::CloseOnly, h);
      CHECK(fm.rows.rows() == n - h);
      CHECK(fm.targets.size() == n - h);
    }
  }
  PriceSeries tiny = helpers::series_from_closes(
      (VectorX<double>(2) << 1, 2).finished());
  CHECK_THROWS_AS(to_features(tiny, FeatureMode::CloseOnly, 2), Error);
}

TEST_CASE("scaler maps the training range onto [0,1]") {
  MatrixX<double> rows(2, 1);
  rows << 0, 10;
  const auto s = fit_scaler(rows);
  CHECK(apply(s, (VectorX<double>(1) << 5).finished())(0) ==
        doctest::Approx(0.5));
  CHECK(apply(s, (VectorX<double>(1) << 0).finished())(0) == 0.0);
  CHECK(apply(s, (VectorX<double>(1) << 10).finished())(0) == 1.0);
}

TEST_CASE("constant features scale to zero") {
  MatrixX<double> rows(2, 1);
  rows << 7, 7;
  const auto s = fit_scaler(rows);
  CHECK(apply(s, (VectorX<double>(1) << 7).finished())(0) == 0.0);
}

TEST_CASE("invert after apply is the identity for non-constant features") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 4;
    MatrixX<double> rows(8, d);
    for (Index i = 0; i < rows.size(); ++i) rows(i) = dist(rng);
    const auto s = fit_scaler(rows);
    VectorX<double> x(d);
    for (Index j = 0; j < d; ++j) x(j) = dist(rng);
    const VectorX<double> back = invert(s, apply(s, x));
    CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("scaler rejects dimension mismatches and empty fits") {
  MatrixX<double> rows(2, 2);
  rows << 1, 2, 3, 4;
  const auto s = fit_scaler(rows);
  CHECK_THROWS_AS(apply(s, (VectorX<double>(3) << 1, 2, 3).finished()), Error);
  CHECK_THROWS_AS(fit_scaler(MatrixX<double>(0, 2)), Error);
}
