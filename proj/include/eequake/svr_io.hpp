#ifndef EEQUAKE_SVR_IO_HPP
#define EEQUAKE_SVR_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "eequake/svr.hpp"

namespace eequake::svr {

inline constexpr int kModelFormatVersion = 1;

/// Versioned flat-file model format. Doubles are written with shortest
/// round-trip precision, so a save/load cycle reproduces predictions
/// bit-for-bit.
inline void save(const SvrModel<double>& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["hyperparams"] = {{"c", model.hyperparams.c},
                      {"gamma", model.hyperparams.gamma},
                      {"epsilon", model.hyperparams.epsilon}};
  j["bias"] = model.bias;
  j["dual_coefficients"] = std::vector<double>(
      model.dual_coefficients.data(),
      model.dual_coefficients.data() + model.dual_coefficients.size());
  j["support_indices"] = model.support_indices;
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < model.support_vectors.rows(); ++i) {
    std::vector<double> row(model.support_vectors.cols());
    for (Index c = 0; c < model.support_vectors.cols(); ++c)
      row[static_cast<size_t>(c)] = model.support_vectors(i, c);
    rows.push_back(row);
  }
  j["support_vectors"] = rows;
  j["feature_dim"] = model.support_vectors.cols();
  auto scaler_json = [](const timeseries::Scaler<double>& s) {
    return nlohmann::json{
        {"min", std::vector<double>(s.min.data(), s.min.data() + s.min.size())},
        {"max", std::vector<double>(s.max.data(), s.max.data() + s.max.size())}};
  };
  j["feature_scaler"] =
      model.feature_scaler ? scaler_json(*model.feature_scaler)
                           : nlohmann::json(nullptr);
  j["target_scaler"] = model.target_scaler ? scaler_json(*model.target_scaler)
                                           : nlohmann::json(nullptr);
  j["converged"] = model.converged;
  j["pair_updates"] = model.pair_updates;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("svr::save: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline SvrModel<double> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("svr::load: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw Error("svr::load: unsupported model format version");

  SvrModel<double> model;
  model.hyperparams.c = j["hyperparams"]["c"].get<double>();
  model.hyperparams.gamma = j["hyperparams"]["gamma"].get<double>();
  model.hyperparams.epsilon = j["hyperparams"]["epsilon"].get<double>();
  model.bias = j["bias"].get<double>();
  const auto coeffs = j["dual_coefficients"].get<std::vector<double>>();
  model.dual_coefficients =
      Eigen::Map<const VectorX<double>>(coeffs.data(),
                                        static_cast<Index>(coeffs.size()));
  model.support_indices = j["support_indices"].get<std::vector<Index>>();
  const auto& rows = j["support_vectors"];
  const Index dim = j["feature_dim"].get<Index>();
  model.support_vectors.resize(static_cast<Index>(rows.size()), dim);
  for (Index i = 0; i < model.support_vectors.rows(); ++i) {
    const auto row = rows[static_cast<size_t>(i)].get<std::vector<double>>();
    for (Index c = 0; c < dim; ++c)
      model.support_vectors(i, c) = row[static_cast<size_t>(c)];
  }
  auto scaler_from = [](const nlohmann::json& js) {
    timeseries::Scaler<double> s;
    const auto mn = js["min"].get<std::vector<double>>();
    const auto mx = js["max"].get<std::vector<double>>();
    s.min = Eigen::Map<const VectorX<double>>(mn.data(),
                                              static_cast<Index>(mn.size()));
    s.max = Eigen::Map<const VectorX<double>>(mx.data(),
                                              static_cast<Index>(mx.size()));
    return s;
  };
  if (!j["feature_scaler"].is_null())
    model.feature_scaler = scaler_from(j["feature_scaler"]);
  if (!j["target_scaler"].is_null())
    model.target_scaler = scaler_from(j["target_scaler"]);
  model.converged = j.value("converged", true);
  model.pair_updates = j.value("pair_updates", 0L);
  return model;
}

}  // namespace eequake::svr

#endif  // EEQUAKE_SVR_IO_HPP
