#ifndef EEQUAKE_PIPELINE_HPP
#define EEQUAKE_PIPELINE_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eequake/common.hpp"
#include "eequake/detector.hpp"
#include "eequake/emd.hpp"
#include "eequake/hht.hpp"
#include "eequake/stationarity.hpp"
#include "eequake/svr.hpp"
#include "eequake/timeseries.hpp"

namespace eequake::pipeline {

using eequake::mape;
using json = nlohmann::json;

struct RunConfig {
  std::string input_path;
  timeseries::CsvSchema schema;
  std::string interval = "daily";

  timeseries::FeatureMode features = timeseries::FeatureMode::CloseOnly;
  int horizon = 1;
  Index train_size = 570;
  Index test_size = 30;
  std::vector<Index> block_sizes = {30, 5, 1};

  double b = 4.0;                       // detector threshold multiplier
  Index min_gap = 2;
  Index polarity_window = 3;
  Index n_freq_bins = 128;
  emd::SiftConfig sift;
  stationarity::AdfSpec adf;

  svr::GridSpec<double> grid;
  double epsilon = 0.1;
  svr::TrainConfig svr_train;

  std::optional<Index> ee_index;        // overrides detection for predict runs
  std::string out_dir;                  // empty = no artifacts written
  std::uint64_t seed = 0;               // echoed into artifacts; the pipeline
                                        // itself draws no random numbers
};

// ---------------------------------------------------------------------------
// Deterministic artifact formatting
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path.string());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage outcomes
// ---------------------------------------------------------------------------

struct DetectOutcome {
  timeseries::PriceSeries series;
  stationarity::AdfResult adf;
  emd::Decomposition<double> decomposition;
  hht::HilbertSpectrum<double> spectrum;
  hht::EnergySeries<double> energy;
  stationarity::DnsCurve<double> dns;
  detector::Threshold<double> threshold;
  detector::DetectionReport<double> report;
};

struct BlockReport {
  Index size = 0;
  Index start = 0;  // inclusive bar span
  Index end = 0;
  double mape = 0;
  double accuracy = 0;  // 100 - mape, exactly
};

struct EvalReport {
  int horizon = 1;
  timeseries::FeatureMode features = timeseries::FeatureMode::CloseOnly;
  Index ee_index = 0;
  std::vector<BlockReport> blocks;
  svr::Hyperparams<double> hyperparams;
};

struct PredictOutcome {
  timeseries::PriceSeries series;
  EvalReport report;
  Index test_start = 0;
  VectorX<double> actual;     // test-span closes
  VectorX<double> predicted;  // aligned with actual
  svr::SvrModel<double> model;
  svr::GridSearchResult<double> grid;
};

struct PredictDetectOutcome {
  PredictOutcome predict;
  VectorX<double> predicted_series;  // full-length assembled series
  std::vector<detector::ExtremeEvent<double>> events;
  detector::Threshold<double> threshold;
  detector::Polarity original_polarity = detector::Polarity::Undetermined;
  std::optional<detector::ExtremeEvent<double>> matched;  // within +-3 bars,
                                                          // same polarity
};

// ---------------------------------------------------------------------------
// Stage helpers
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline timeseries::PriceSeries load_series(const RunConfig& config) {
  return stage("parse", [&] {
    return timeseries::parse_csv_file(config.input_path, config.schema,
                                      config.interval);
  });
}

// EMD + HHT + threshold detection on a bare close vector.
struct CoreDetection {
  emd::Decomposition<double> decomposition;
  hht::HilbertSpectrum<double> spectrum;
  hht::EnergySeries<double> energy;
  stationarity::DnsCurve<double> dns;
  detector::Threshold<double> threshold;
  std::vector<detector::ExtremeEvent<double>> events;
};

inline CoreDetection detect_core(const VectorX<double>& closes,
                                 const RunConfig& config) {
  CoreDetection core;
  core.decomposition = stage("emd", [&] { return emd::decompose(closes, config.sift); });
  if (core.decomposition.imfs.empty())
    throw StageError("emd",
                     "no oscillatory modes: the series decomposes to a bare residue");
  stage("hht", [&] {
    core.spectrum = hht::spectrum(core.decomposition, config.n_freq_bins);
    core.energy = hht::instantaneous_energy(core.decomposition);
    return 0;
  });
  core.dns = stage("dns", [&] { return stationarity::dns(core.spectrum); });
  stage("detect", [&] {
    core.threshold = detector::threshold(core.energy, config.b);
    core.events = detector::detect(core.energy, core.threshold,
                                   {config.min_gap});
    return 0;
  });
  return core;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Artifact writers (fixed column orders; byte-identical across reruns)
// ---------------------------------------------------------------------------

namespace artifacts {

inline json config_echo(const RunConfig& config) {
  json j;
  j["input"] = config.input_path;
  j["interval"] = config.interval;
  j["features"] = timeseries::to_string(config.features);
  j["horizon"] = config.horizon;
  j["train_size"] = config.train_size;
  j["test_size"] = config.test_size;
  j["b"] = config.b;
  j["min_gap"] = config.min_gap;
  j["polarity_window"] = config.polarity_window;
  j["n_freq_bins"] = config.n_freq_bins;
  j["epsilon"] = config.epsilon;
  j["seed"] = config.seed;
  return j;
}

inline void write_stationarity_json(const std::filesystem::path& dir,
                                    const stationarity::AdfResult& adf,
                                    const stationarity::DnsCurve<double>* dns,
                                    const RunConfig& config) {
  json j;
  j["t_statistic"] = adf.t_statistic;
  json cv;
  for (const auto& [level, value] : adf.critical_values)
    cv[std::to_string(level) + "%"] = value;
  j["critical_values"] = cv;
  j["p_value"] = adf.p_value;
  j["lags_used"] = adf.lags_used;
  if (adf.reject_unit_root_at)
    j["reject_unit_root_at"] = std::to_string(*adf.reject_unit_root_at) + "%";
  else
    j["reject_unit_root_at"] = nullptr;
  j["deterministic"] = stationarity::to_string(config.adf.deterministic);
  if (dns) {
    j["dns"] = {{"flatness", dns->flatness},
                {"populated_bins", dns->values.size()}};
  }
  std::ofstream out = detail::open_out(dir / "stationarity.json");
  out << j.dump(2) << "\n";
}

inline void write_dns_csv(const std::filesystem::path& dir,
                          const stationarity::DnsCurve<double>& dns) {
  std::ofstream out = detail::open_out(dir / "dns.csv");
  out << "omega,dns_value\n";
  for (Index i = 0; i < dns.frequencies.size(); ++i)
    out << detail::fmt(dns.frequencies(i)) << ","
        << detail::fmt(dns.values(i)) << "\n";
}

inline void write_imfs_csv(const std::filesystem::path& dir,
                           const emd::Decomposition<double>& d) {
  std::ofstream out = detail::open_out(dir / "imfs.csv");
  for (size_t k = 0; k < d.imfs.size(); ++k)
    out << "imf" << (k + 1) << ",";
  out << "residue\n";
  for (Index t = 0; t < d.input_length; ++t) {
    for (const auto& imf : d.imfs) out << detail::fmt(imf.values(t)) << ",";
    out << detail::fmt(d.residue(t)) << "\n";
  }
}

inline void write_spectrum_csv(const std::filesystem::path& dir,
                               const hht::HilbertSpectrum<double>& hs) {
  // Row-major cell order (ascending t, then omega).
  std::vector<std::tuple<Index, Index, double>> cells;
  for (Index k = 0; k < hs.cells.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(hs.cells, k); it; ++it)
      cells.emplace_back(it.row(), it.col(), it.value());
  std::sort(cells.begin(), cells.end());
  std::ofstream out = detail::open_out(dir / "spectrum.csv");
  out << "t,omega,amplitude\n";
  for (const auto& [t, b, amp] : cells)
    out << t << "," << detail::fmt(hs.bin_center(b)) << ","
        << detail::fmt(amp) << "\n";
}

inline void write_energy_csv(const std::filesystem::path& dir,
                             const hht::EnergySeries<double>& energy) {
  std::ofstream out = detail::open_out(dir / "energy.csv");
  out << "t,IE,IE_N\n";
  for (Index t = 0; t < energy.ie.size(); ++t)
    out << t << "," << detail::fmt(energy.ie(t)) << ","
        << detail::fmt(energy.ie_norm(t)) << "\n";
}

inline void write_overlay_csv(const std::filesystem::path& dir,
                              const hht::EnergySeries<double>& energy,
                              const detector::Threshold<double>& th) {
  std::ofstream out = detail::open_out(dir / "overlay.csv");
  out << "t,IE_N,E_th\n";
  for (Index t = 0; t < energy.ie_norm.size(); ++t)
    out << t << "," << detail::fmt(energy.ie_norm(t)) << ","
        << detail::fmt(th.e_th) << "\n";
}

inline json event_json(const detector::ExtremeEvent<double>& ev) {
  return json{{"start", ev.start},
              {"peak", ev.peak},
              {"end", ev.end},
              {"polarity", detector::to_string(ev.polarity)},
              {"ratio", ev.ratio},
              {"peak_energy_norm", ev.peak_energy_norm}};
}

inline void write_events_json(const std::filesystem::path& dir,
                              const detector::DetectionReport<double>& report,
                              const timeseries::PriceSeries& series,
                              const RunConfig& config) {
  json j;
  j["series"] = {{"id", report.series_id},
                 {"interval", series.interval},
                 {"length", series.size()}};
  j["threshold"] = {
      {"b", report.threshold.b},
      {"e_mu", report.threshold.e_mu},
      {"sigma", report.threshold.sigma},
      {"e_th", report.threshold.e_th},
      {"scale", report.threshold.scale == detector::EnergyScale::Raw
                    ? "raw"
                    : "normalized"},
      {"degenerate", report.threshold.degenerate}};
  j["events"] = json::array();
  for (const auto& ev : report.events) j["events"].push_back(event_json(ev));
  j["config"] = config_echo(config);
  std::ofstream out = detail::open_out(dir / "events.json");
  out << j.dump(2) << "\n";
}

inline void write_predictions_csv(const std::filesystem::path& dir,
                                  Index test_start,
                                  const VectorX<double>& actual,
                                  const VectorX<double>& predicted) {
  std::ofstream out = detail::open_out(dir / "predictions.csv");
  out << "t,actual,predicted\n";
  for (Index i = 0; i < actual.size(); ++i)
    out << (test_start + i) << "," << detail::fmt(actual(i)) << ","
        << detail::fmt(predicted(i)) << "\n";
}

inline void write_report_json(const std::filesystem::path& dir,
                              const PredictOutcome& outcome,
                              const RunConfig& config) {
  json j;
  j["horizon"] = outcome.report.horizon;
  j["features"] = timeseries::to_string(outcome.report.features);
  j["ee_index"] = outcome.report.ee_index;
  j["test_start"] = outcome.test_start;
  j["hyperparams"] = {{"c", outcome.report.hyperparams.c},
                      {"gamma", outcome.report.hyperparams.gamma},
                      {"epsilon", outcome.report.hyperparams.epsilon}};
  j["blocks"] = json::array();
  for (const auto& b : outcome.report.blocks)
    j["blocks"].push_back(json{{"size", b.size},
                               {"start", b.start},
                               {"end", b.end},
                               {"mape", b.mape},
                               {"accuracy", b.accuracy}});
  json scores = json::array();
  for (Index r = 0; r < outcome.grid.scores.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < outcome.grid.scores.cols(); ++c)
      row.push_back(outcome.grid.scores(r, c));
    scores.push_back(row);
  }
  j["grid_scores"] = scores;
  j["config"] = config_echo(config);
  std::ofstream out = detail::open_out(dir / "report.json");
  out << j.dump(2) << "\n";
}

inline void write_predicted_series_csv(const std::filesystem::path& dir,
                                       const VectorX<double>& series) {
  std::ofstream out = detail::open_out(dir / "predicted_series.csv");
  out << "t,close\n";
  for (Index t = 0; t < series.size(); ++t)
    out << t << "," << detail::fmt(series(t)) << "\n";
}

inline void write_predicted_events_json(const std::filesystem::path& dir,
                                        const PredictDetectOutcome& outcome) {
  json j;
  j["original_ee"] = {
      {"index", outcome.predict.report.ee_index},
      {"polarity", detector::to_string(outcome.original_polarity)}};
  j["matched"] = outcome.matched.has_value();
  j["matched_event"] =
      outcome.matched ? event_json(*outcome.matched) : json(nullptr);
  j["events"] = json::array();
  for (const auto& ev : outcome.events) j["events"].push_back(event_json(ev));
  std::ofstream out = detail::open_out(dir / "predicted_events.json");
  out << j.dump(2) << "\n";
}

}  // namespace artifacts

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

/// Stationarity check, EMD, HHT and threshold detection over one series;
/// writes stationarity.json, dns.csv, imfs.csv, spectrum.csv, energy.csv,
/// overlay.csv and events.json when an output directory is configured.
inline DetectOutcome run_detect(const RunConfig& config,
                                const timeseries::PriceSeries& series) {
  if (series.size() < 64)
    throw StageError("parse", "input too short: need >= 64 bars");
  DetectOutcome out;
  out.series = series;
  const VectorX<double> closes = series.closes();

  out.adf = detail::stage("adf", [&] { return stationarity::adf_test(closes, config.adf); });
  auto core = detail::detect_core(closes, config);
  out.decomposition = std::move(core.decomposition);
  out.spectrum = std::move(core.spectrum);
  out.energy = std::move(core.energy);
  out.dns = std::move(core.dns);
  out.threshold = core.threshold;
  out.report.threshold = core.threshold;
  out.report.series_id = config.input_path.empty()
                             ? std::string("series")
                             : std::filesystem::path(config.input_path)
                                   .stem()
                                   .string();
  for (auto& ev : core.events) {
    try {
      ev.polarity = detector::classify_polarity(series, ev,
                                                config.polarity_window);
    } catch (const Error&) {
      ev.polarity = detector::Polarity::Undetermined;  // boundary event
    }
    out.report.events.push_back(ev);
  }

  if (!config.out_dir.empty()) {
    std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    artifacts::write_stationarity_json(dir, out.adf, &out.dns, config);
    artifacts::write_dns_csv(dir, out.dns);
    artifacts::write_imfs_csv(dir, out.decomposition);
    artifacts::write_spectrum_csv(dir, out.spectrum);
    artifacts::write_energy_csv(dir, out.energy);
    artifacts::write_overlay_csv(dir, out.energy, out.threshold);
    artifacts::write_events_json(dir, out.report, series, config);
  }
  return out;
}

inline DetectOutcome run_detect(const RunConfig& config) {
  return run_detect(config, detail::load_series(config));
}

namespace detail {

inline Index resolve_ee_index(const RunConfig& config,
                              const timeseries::PriceSeries& series,
                              Index test_start, Index test_end) {
  if (config.ee_index) {
    if (*config.ee_index < test_start || *config.ee_index >= test_end)
      throw StageError("predict",
                       "EE index " + std::to_string(*config.ee_index) +
                           " outside test span [" + std::to_string(test_start) +
                           ", " + std::to_string(test_end) + ")");
    return *config.ee_index;
  }
  auto core = detect_core(series.closes(), config);
  const detector::ExtremeEvent<double>* best = nullptr;
  for (const auto& ev : core.events) {
    if (ev.peak < test_start || ev.peak >= test_end) continue;
    if (!best || ev.peak_energy_norm > best->peak_energy_norm) best = &ev;
  }
  if (!best)
    throw StageError("predict", "no extreme event inside the test span; "
                                "pass an explicit EE index");
  return best->peak;
}

}  // namespace detail

/// Grid-searched SVR fit on the first train_size bars (scalers fit on the
/// training span only), out-of-sample prediction of the test span, and
/// block-wise MAPE/accuracy around the extreme event.
inline PredictOutcome run_predict(const RunConfig& config,
                                  const timeseries::PriceSeries& series) {
  const Index n = series.size();
  const int h = config.horizon;
  if (config.train_size + config.test_size > n)
    throw StageError("predict", "series shorter than train_size + test_size");
  if (config.train_size <= h + 1)
    throw StageError("predict", "train_size too small for the horizon");

  const Index test_start = n - config.test_size;
  const Index ee =
      detail::resolve_ee_index(config, series, test_start, n);

  PredictOutcome out;
  out.series = series;
  out.test_start = test_start;

  const auto fm = detail::stage("features", [&] {
    return timeseries::to_features(series, config.features, h);
  });

  // Training rows keep both features and target inside the training span;
  // test rows are those whose target bar falls in the test span.
  const Index n_train_rows = config.train_size - h;
  const MatrixX<double> train_rows = fm.rows.topRows(n_train_rows);
  const VectorX<double> train_targets = fm.targets.head(n_train_rows);

  detail::stage("svr", [&] {
    out.grid = svr::grid_search(train_rows, train_targets, config.grid,
                                config.epsilon, config.svr_train);
    out.model = svr::fit_scaled(train_rows, train_targets, out.grid.best,
                                config.svr_train);
    return 0;
  });

  out.actual.resize(config.test_size);
  out.predicted.resize(config.test_size);
  for (Index t = test_start; t < n; ++t) {
    const Index row = t - h;
    out.actual(t - test_start) = series.bars[static_cast<size_t>(t)].close;
    out.predicted(t - test_start) =
        svr::predict(out.model, VectorX<double>(fm.rows.row(row).transpose()));
  }

  out.report.horizon = h;
  out.report.features = config.features;
  out.report.ee_index = ee;
  out.report.hyperparams = out.grid.best;
  for (Index size : config.block_sizes) {
    BlockReport br;
    br.size = size;
    if (size >= config.test_size) {
      br.start = test_start;
      br.end = n - 1;
    } else {
      br.start = std::max(test_start, ee - size + 1);
      br.end = ee;
    }
    const Index len = br.end - br.start + 1;
    br.mape = mape(out.actual.segment(br.start - test_start, len),
                   out.predicted.segment(br.start - test_start, len));
    br.accuracy = 100.0 - br.mape;
    out.report.blocks.push_back(br);
  }

  if (!config.out_dir.empty()) {
    std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    artifacts::write_predictions_csv(dir, test_start, out.actual,
                                     out.predicted);
    artifacts::write_report_json(dir, out, config);
  }
  return out;
}

inline PredictOutcome run_predict(const RunConfig& config) {
  return run_predict(config, detail::load_series(config));
}

/// Re-runs detection on the assembled predicted series (model fits over the
/// training span, out-of-sample predictions over the test span) and checks
/// whether the original extreme event is recovered within +-3 bars with the
/// same polarity.
inline PredictDetectOutcome run_predict_detect(
    const RunConfig& config, const timeseries::PriceSeries& series) {
  PredictDetectOutcome out;
  out.predict = run_predict(config, series);
  const int h = config.horizon;
  const Index n = series.size();

  const auto fm = timeseries::to_features(series, config.features, h);
  out.predicted_series.resize(n);
  for (Index t = 0; t < n; ++t) {
    if (t < h) {
      out.predicted_series(t) = series.bars[static_cast<size_t>(t)].close;
    } else {
      out.predicted_series(t) = svr::predict(
          out.predict.model,
          VectorX<double>(fm.rows.row(t - h).transpose()));
    }
  }

  timeseries::PriceSeries predicted_bars;
  predicted_bars.interval = series.interval;
  predicted_bars.bars.reserve(static_cast<size_t>(n));
  for (Index t = 0; t < n; ++t) {
    timeseries::PriceBar bar;
    bar.timestamp = series.bars[static_cast<size_t>(t)].timestamp;
    const double p = out.predicted_series(t);
    bar.open = bar.high = bar.low = bar.close = p;
    predicted_bars.bars.push_back(std::move(bar));
  }

  // Polarity of the original event, for the match test.
  detector::ExtremeEvent<double> original;
  original.start = original.peak = original.end = out.predict.report.ee_index;
  out.original_polarity =
      detector::classify_polarity(series, original, config.polarity_window);

  auto core = detail::detect_core(out.predicted_series, config);
  out.threshold = core.threshold;
  for (auto& ev : core.events) {
    try {
      ev.polarity = detector::classify_polarity(predicted_bars, ev,
                                                config.polarity_window);
    } catch (const Error&) {
      ev.polarity = detector::Polarity::Undetermined;
    }
    out.events.push_back(ev);
    if (!out.matched &&
        std::abs(ev.peak - out.predict.report.ee_index) <= 3 &&
        ev.polarity == out.original_polarity)
      out.matched = ev;
  }

  if (!config.out_dir.empty()) {
    std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    artifacts::write_predicted_series_csv(dir, out.predicted_series);
    artifacts::write_predicted_events_json(dir, out);
  }
  return out;
}

inline PredictDetectOutcome run_predict_detect(const RunConfig& config) {
  return run_predict_detect(config, detail::load_series(config));
}

}  // namespace eequake::pipeline

#endif  // EEQUAKE_PIPELINE_HPP
