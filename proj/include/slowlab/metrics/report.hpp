#ifndef SLOWLAB_METRICS_REPORT_HPP_
#define SLOWLAB_METRICS_REPORT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/common.hpp"

namespace slowlab::metrics {

struct MetricReport {
  std::string metric_name;
  double score = 0.0;
  std::map<std::string, Matrix> matrices;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::vector<std::string> notes;
};

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricReport& report);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_REPORT_HPP_
