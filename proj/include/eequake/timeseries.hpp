#ifndef EEQUAKE_TIMESERIES_HPP
#define EEQUAKE_TIMESERIES_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "eequake/common.hpp"

namespace eequake::timeseries {

/// One OHLC bar. Timestamps are opaque labels ordered lexicographically,
/// which matches ISO-formatted vendor exports; no calendar arithmetic is done.
struct PriceBar {
  std::string timestamp;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
  std::optional<double> volume;

  bool valid() const {
    auto finite_pos = [](double v) { return std::isfinite(v) && v > 0; };
    return finite_pos(open) && finite_pos(high) && finite_pos(low) &&
           finite_pos(close) && low <= std::min(open, close) &&
           high >= std::max(open, close) &&
           (!volume || (std::isfinite(*volume) && *volume >= 0));
  }
};

struct PriceSeries {
  std::vector<PriceBar> bars;
  std::string interval = "daily";

  Index size() const { return static_cast<Index>(bars.size()); }

  VectorX<double> closes() const {
    VectorX<double> c(size());
    for (Index i = 0; i < size(); ++i) c(i) = bars[i].close;
    return c;
  }
};

/// Column-name map; defaults follow the Yahoo Finance export header.
/// Set `close = "Adj Close"` to train on adjusted closes instead.
struct CsvSchema {
  std::string date = "Date";
  std::string open = "Open";
  std::string high = "High";
  std::string low = "Low";
  std::string close = "Close";
  std::string volume = "Volume";  // optional in the file
};

struct ParseStats {
  Index rows_dropped = 0;  // rows with blank/NaN prices
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Returns nullopt for blank / "null" / unparseable fields.
inline std::optional<double> parse_price(const std::string& raw) {
  std::string s = trim(raw);
  if (s.empty() || s == "null" || s == "NULL" || s == "nan" || s == "NaN")
    return std::nullopt;
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Parses an OHLC CSV with a header row. Rows are re-sorted ascending by
/// timestamp; rows with blank or unparseable prices are dropped (counted
/// in `stats`), while structurally invalid bars abort with the row number.
inline PriceSeries parse_csv(std::istream& in, const CsvSchema& schema = {},
                             const std::string& interval = "daily",
                             ParseStats* stats = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw Error("parse_csv: empty input");
  auto header = detail::split_csv_line(line);

  std::unordered_map<std::string, Index> col;
  for (Index i = 0; i < static_cast<Index>(header.size()); ++i)
    col[detail::trim(header[i])] = i;

  auto require = [&](const std::string& name) -> Index {
    auto it = col.find(name);
    if (it == col.end())
      throw Error("parse_csv: missing required column \"" + name + "\"");
    return it->second;
  };
  const Index c_date = require(schema.date);
  const Index c_open = require(schema.open);
  const Index c_high = require(schema.high);
  const Index c_low = require(schema.low);
  const Index c_close = require(schema.close);
  const auto it_vol = col.find(schema.volume);
  const std::optional<Index> c_vol =
      it_vol == col.end() ? std::nullopt : std::optional<Index>(it_vol->second);

  PriceSeries series;
  series.interval = interval;
  Index dropped = 0;
  Index row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    const Index needed =
        std::max({c_date, c_open, c_high, c_low, c_close,
                  c_vol.value_or(Index(0))});
    if (static_cast<Index>(fields.size()) <= needed) {
      ++dropped;
      continue;
    }
    PriceBar bar;
    bar.timestamp = detail::trim(fields[c_date]);
    auto open = detail::parse_price(fields[c_open]);
    auto high = detail::parse_price(fields[c_high]);
    auto low = detail::parse_price(fields[c_low]);
    auto close = detail::parse_price(fields[c_close]);
    if (!open || !high || !low || !close || bar.timestamp.empty()) {
      ++dropped;
      continue;
    }
    bar.open = *open;
    bar.high = *high;
    bar.low = *low;
    bar.close = *close;
    if (c_vol) bar.volume = detail::parse_price(fields[*c_vol]);
    if (!bar.valid())
      throw Error("parse_csv: bar invariant violated at data row " +
                  std::to_string(row) + " (low <= min(open,close) <= max(open,close) <= high, prices > 0)");
    series.bars.push_back(std::move(bar));
  }
  if (stats) stats->rows_dropped = dropped;

  std::stable_sort(series.bars.begin(), series.bars.end(),
                   [](const PriceBar& a, const PriceBar& b) {
                     return a.timestamp < b.timestamp;
                   });
  for (size_t i = 1; i < series.bars.size(); ++i)
    if (series.bars[i - 1].timestamp == series.bars[i].timestamp)
      throw Error("parse_csv: duplicate timestamp \"" +
                  series.bars[i].timestamp + "\"");
  if (series.size() < 2)
    throw Error("parse_csv: fewer than 2 valid rows");
  return series;
}

inline PriceSeries parse_csv_file(const std::string& path,
                                  const CsvSchema& schema = {},
                                  const std::string& interval = "daily",
                                  ParseStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("parse_csv: cannot open \"" + path + "\"");
  return parse_csv(in, schema, interval, stats);
}

enum class FeatureMode { CloseOnly, Ohlc };

inline const char* to_string(FeatureMode m) {
  return m == FeatureMode::CloseOnly ? "close" : "ohlc";
}

/// Lagged-feature regression layout: row i holds bar i's features and
/// target i is the close of bar i + horizon.
struct FeatureMatrix {
  MatrixX<double> rows;      // (n - horizon) x d
  VectorX<double> targets;   // close prices, aligned with rows
  int horizon = 1;
};

inline FeatureMatrix to_features(const PriceSeries& series, FeatureMode mode,
                                 int horizon) {
  if (horizon != 1 && horizon != 2)
    throw Error("to_features: horizon must be 1 or 2");
  const Index n = series.size();
  if (n <= horizon) throw Error("to_features: series too short for horizon");
  const Index rows = n - horizon;
  const Index d = mode == FeatureMode::CloseOnly ? 1 : 4;
  FeatureMatrix fm;
  fm.horizon = horizon;
  fm.rows.resize(rows, d);
  fm.targets.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    const PriceBar& bar = series.bars[static_cast<size_t>(i)];
    if (mode == FeatureMode::CloseOnly) {
      fm.rows(i, 0) = bar.close;
    } else {
      fm.rows(i, 0) = bar.open;
      fm.rows(i, 1) = bar.high;
      fm.rows(i, 2) = bar.low;
      fm.rows(i, 3) = bar.close;
    }
    fm.targets(i) = series.bars[static_cast<size_t>(i + horizon)].close;
  }
  return fm;
}

/// Per-feature min-max bounds fit on training rows only.
template <typename Scalar>
struct Scaler {
  VectorX<Scalar> min;
  VectorX<Scalar> max;

  Index dim() const { return min.size(); }
};

template <typename Derived>
Scaler<typename Derived::Scalar> fit_scaler(
    const Eigen::MatrixBase<Derived>& rows) {
  if (rows.rows() == 0) throw Error("fit_scaler: empty row set");
  Scaler<typename Derived::Scalar> s;
  s.min = rows.colwise().minCoeff();
  s.max = rows.colwise().maxCoeff();
  return s;
}

/// Maps training min -> 0 and max -> 1 per feature; constant features map to 0.
template <typename Scalar, typename Derived>
VectorX<Scalar> apply(const Scaler<Scalar>& s,
                      const Eigen::MatrixBase<Derived>& row) {
  if (row.size() != s.dim()) throw Error("scaler apply: dimension mismatch");
  VectorX<Scalar> out(s.dim());
  for (Index j = 0; j < s.dim(); ++j) {
    const Scalar range = s.max(j) - s.min(j);
    out(j) = range > Scalar(0) ? (row(j) - s.min(j)) / range : Scalar(0);
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> apply_rows(const Scaler<Scalar>& s, const MatrixX<Scalar>& rows) {
  if (rows.cols() != s.dim()) throw Error("scaler apply: dimension mismatch");
  MatrixX<Scalar> out(rows.rows(), rows.cols());
  for (Index i = 0; i < rows.rows(); ++i)
    out.row(i) = apply(s, rows.row(i).transpose()).transpose();
  return out;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> invert(const Scaler<Scalar>& s,
                       const Eigen::MatrixBase<Derived>& row) {
  if (row.size() != s.dim()) throw Error("scaler invert: dimension mismatch");
  VectorX<Scalar> out(s.dim());
  for (Index j = 0; j < s.dim(); ++j)
    out(j) = s.min(j) + row(j) * (s.max(j) - s.min(j));
  return out;
}

}  // namespace eequake::timeseries

#endif  // EEQUAKE_TIMESERIES_HPP
