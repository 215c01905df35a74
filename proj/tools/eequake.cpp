// eequake: extreme-event detection and SVR forecasting for OHLC price series.
//
// Subcommands mirror the pipeline stages: adf, dns, emd, hht, detect,
// predict, full. Every run is deterministic; identical invocations produce
// byte-identical artifacts.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "eequake/pipeline.hpp"

namespace {

using namespace eequake;

pipeline::RunConfig g_config;
std::string g_schema_spec;
std::string g_adf_det = "constant";
std::string g_features = "close";
int g_adf_lags = -1;
long long g_ee_index = -1;

void apply_schema(const std::string& spec, timeseries::CsvSchema& schema) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Error("bad --schema entry \"" + item + "\" (want key=Column)");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "date") schema.date = value;
    else if (key == "open") schema.open = value;
    else if (key == "high") schema.high = value;
    else if (key == "low") schema.low = value;
    else if (key == "close") schema.close = value;
    else if (key == "volume") schema.volume = value;
    else throw Error("unknown --schema key \"" + key + "\"");
  }
}

pipeline::RunConfig finalize_config() {
  pipeline::RunConfig config = g_config;
  if (!g_schema_spec.empty()) apply_schema(g_schema_spec, config.schema);
  if (g_adf_det == "none")
    config.adf.deterministic = stationarity::Deterministic::None;
  else if (g_adf_det == "constant")
    config.adf.deterministic = stationarity::Deterministic::Constant;
  else if (g_adf_det == "trend")
    config.adf.deterministic = stationarity::Deterministic::ConstantTrend;
  else
    throw Error("unknown --adf-det \"" + g_adf_det + "\"");
  if (g_adf_lags >= 0) config.adf.lags = g_adf_lags;
  if (g_ee_index >= 0) config.ee_index = Index(g_ee_index);
  if (g_features == "close")
    config.features = timeseries::FeatureMode::CloseOnly;
  else if (g_features == "ohlc")
    config.features = timeseries::FeatureMode::Ohlc;
  else
    throw Error("unknown --features \"" + g_features + "\" (want close|ohlc)");
  if (config.out_dir.empty()) config.out_dir = ".";
  return config;
}

void add_common_options(CLI::App* cmd) {
  cmd->add_option("--input", g_config.input_path, "input OHLC CSV")->required();
  cmd->add_option("--schema", g_schema_spec,
                  "column map, e.g. close=Adj Close,date=Date");
  cmd->add_option("--interval", g_config.interval,
                  "bar spacing tag (5min/10min/15min/30min/daily/weekly)");
  cmd->add_option("--out", g_config.out_dir, "output directory (default .)");
  cmd->add_option("--seed", g_config.seed,
                  "seed echoed into artifacts (the pipeline is deterministic)");
}

void add_detect_options(CLI::App* cmd) {
  cmd->add_option("--b", g_config.b, "threshold multiplier B in E_mu + B*sigma");
  cmd->add_option("--min-gap", g_config.min_gap, "merge events closer than this");
  cmd->add_option("--window", g_config.polarity_window, "polarity window in bars");
  cmd->add_option("--bins", g_config.n_freq_bins, "frequency bins over [0, pi]");
}

void add_adf_options(CLI::App* cmd) {
  cmd->add_option("--adf-det", g_adf_det,
                  "deterministic terms: none|constant|trend");
  cmd->add_option("--adf-lags", g_adf_lags, "explicit lag count (default: AIC)");
}

void add_predict_options(CLI::App* cmd) {
  cmd->add_option("--features", g_features, "feature mode: close|ohlc");
  cmd->add_option("--horizon", g_config.horizon, "prediction horizon: 1|2")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--train", g_config.train_size, "training bars (default 570)");
  cmd->add_option("--test", g_config.test_size, "test bars (default 30)");
  cmd->add_option("--epsilon", g_config.epsilon, "SVR insensitivity tube");
  cmd->add_option("--folds", g_config.grid.cv_folds,
                  "expanding-window CV folds");
  cmd->add_option("--ee-index", g_ee_index,
                  "extreme-event bar index (default: detected)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMD/Hilbert-spectrum extreme-event detection and SVR "
               "forecasting for price series"};
  app.require_subcommand(1);

  auto* adf = app.add_subcommand("adf", "augmented Dickey-Fuller unit-root test");
  add_common_options(adf);
  add_adf_options(adf);

  auto* dnscmd = app.add_subcommand("dns", "degree-of-nonstationarity curve");
  add_common_options(dnscmd);
  add_detect_options(dnscmd);

  auto* emdcmd = app.add_subcommand("emd", "empirical mode decomposition");
  add_common_options(emdcmd);

  auto* hhtcmd = app.add_subcommand("hht", "Hilbert spectrum and energy");
  add_common_options(hhtcmd);
  add_detect_options(hhtcmd);

  auto* detect = app.add_subcommand("detect", "extreme-event detection");
  add_common_options(detect);
  add_detect_options(detect);
  add_adf_options(detect);

  auto* predict = app.add_subcommand("predict", "SVR forecast around the EE");
  add_common_options(predict);
  add_detect_options(predict);
  add_predict_options(predict);

  auto* full = app.add_subcommand(
      "full", "detection, prediction and detection-on-predictions");
  add_common_options(full);
  add_detect_options(full);
  add_adf_options(full);
  add_predict_options(full);

  CLI11_PARSE(app, argc, argv);

  try {
    const pipeline::RunConfig config = finalize_config();
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    if (adf->parsed()) {
      auto series = timeseries::parse_csv_file(config.input_path,
                                               config.schema, config.interval);
      auto result = stationarity::adf_test(series.closes(), config.adf);
      pipeline::artifacts::write_stationarity_json(dir, result, nullptr,
                                                   config);
      std::printf("t=%.4f p=%.4f lags=%d\n", result.t_statistic,
                  result.p_value, result.lags_used);
    } else if (dnscmd->parsed()) {
      auto series = timeseries::parse_csv_file(config.input_path,
                                               config.schema, config.interval);
      auto core = pipeline::detail::detect_core(series.closes(), config);
      pipeline::artifacts::write_dns_csv(dir, core.dns);
      std::printf("dns bins=%td flatness=%.6f\n",
                  static_cast<ptrdiff_t>(core.dns.values.size()),
                  core.dns.flatness);
    } else if (emdcmd->parsed()) {
      auto series = timeseries::parse_csv_file(config.input_path,
                                               config.schema, config.interval);
      auto d = emd::decompose(series.closes(), config.sift);
      pipeline::artifacts::write_imfs_csv(dir, d);
      std::printf("imfs=%zu\n", d.imfs.size());
    } else if (hhtcmd->parsed()) {
      auto series = timeseries::parse_csv_file(config.input_path,
                                               config.schema, config.interval);
      auto d = emd::decompose(series.closes(), config.sift);
      if (d.imfs.empty())
        throw StageError("emd", "no oscillatory modes: the series decomposes "
                                "to a bare residue");
      auto hs = hht::spectrum(d, config.n_freq_bins);
      auto energy = hht::instantaneous_energy(d);
      pipeline::artifacts::write_spectrum_csv(dir, hs);
      pipeline::artifacts::write_energy_csv(dir, energy);
      std::printf("cells=%td max_ie=%.6g\n",
                  static_cast<ptrdiff_t>(hs.cells.nonZeros()),
                  energy.ie.maxCoeff());
    } else if (detect->parsed()) {
      auto outcome = pipeline::run_detect(config);
      std::printf("events=%zu threshold=%.6f\n", outcome.report.events.size(),
                  outcome.threshold.e_th);
      for (const auto& ev : outcome.report.events)
        std::printf("  [%td, %td] peak=%td polarity=%s ratio=%.2f\n",
                    static_cast<ptrdiff_t>(ev.start),
                    static_cast<ptrdiff_t>(ev.end),
                    static_cast<ptrdiff_t>(ev.peak),
                    detector::to_string(ev.polarity), ev.ratio);
    } else if (predict->parsed()) {
      auto outcome = pipeline::run_predict(config);
      for (const auto& b : outcome.report.blocks)
        std::printf("%td-block: MAPE=%.4f%% accuracy=%.4f%%\n",
                    static_cast<ptrdiff_t>(b.size), b.mape, b.accuracy);
    } else if (full->parsed()) {
      auto detect_outcome = pipeline::run_detect(config);
      std::printf("events=%zu\n", detect_outcome.report.events.size());
      auto outcome = pipeline::run_predict_detect(config);
      for (const auto& b : outcome.predict.report.blocks)
        std::printf("%td-block: MAPE=%.4f%% accuracy=%.4f%%\n",
                    static_cast<ptrdiff_t>(b.size), b.mape, b.accuracy);
      std::printf("ee re-detected on predictions: %s\n",
                  outcome.matched ? "yes" : "no");
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
