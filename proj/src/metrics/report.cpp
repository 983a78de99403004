#include "slowlab/metrics/report.hpp"

namespace slowlab::metrics {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  require(j.is_array(), "matrix_from_json: expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<Eigen::Index>(j[i].size()) == cols,
            "matrix_from_json: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json out;
  out["metric_name"] = report.metric_name;
  out["score"] = report.score;
  nlohmann::json mats = nlohmann::json::object();
  for (const auto& [name, m] : report.matrices) mats[name] = matrix_to_json(m);
  out["matrices"] = std::move(mats);
  out["config"] = report.config;
  out["seed"] = report.seed;
  out["n_samples"] = report.n_samples;
  if (!report.notes.empty()) out["notes"] = report.notes;
  return out;
}

}  // namespace slowlab::metrics
