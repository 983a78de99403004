#ifndef SLOWLAB_HARNESS_CONFIG_HPP_
#define SLOWLAB_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/common.hpp"
#include "slowlab/estimators/pcl.hpp"
#include "slowlab/estimators/training.hpp"
#include "slowlab/estimators/vae.hpp"
#include "slowlab/estimators/flow.hpp"

namespace slowlab::harness {

// Bad configuration or usage; the CLI maps it to exit code 2.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct MixingSpec {
  // identity | orthogonal | slrelu | expanding | diagonal
  std::string kind = "orthogonal";
  int layers = 1;               // slrelu
  std::optional<double> slope;  // slrelu default 0.5, expanding default 0.2
  int out_dim = 0;              // expanding
  double kappa = 1.0;           // diagonal: scales (1, kappa, ..., kappa)

  double effective_slope() const { return slope.value_or(kind == "expanding" ? 0.2 : 0.5); }
};

struct DatasetSpec {
  std::string source = "pairs";  // pairs | ar | tracks
  int dim = 4;
  double alpha = 1.0;   // transition (pairs) or innovation (ar) shape
  double lambda = 6.0;  // transition (pairs) or innovation (ar) rate
  std::size_t count = 20000;
  std::size_t eval_count = 0;  // 0: evaluate on the training pairs
  MixingSpec mixing;
  bool shuffle_per_factor = false;
  // tracks source
  std::string tracks_path;
  int max_frame_gap = 1;
  bool normalize = true;
};

struct EstimatorSpec {
  std::string kind = "slowflow";  // slowflow | slowvae | pmvae | pcl
  double gamma = 10.0;
  double lambda = 6.0;
  bool bidirectional = true;
  int latent_dim = 0;  // VAEs; 0 means the source dimension
  // Network options without dimensions, as accepted by the flow / VAE / PCL
  // config readers.
  nlohmann::json network = nlohmann::json::object();
  est::TrainConfig train;
};

struct MetricSpec {
  std::string name;  // mcc | mig | sap | modularity | factorvae | betavae
  std::size_t samples = 0;  // rows or points used; 0 means the metric default
  std::string correlation = "spearman";  // mcc only
};

struct SweepSpec {
  std::string axis;  // kappa | layers | alpha | lambda | out_dim | dim | max_frame_gap | gamma
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  DatasetSpec dataset;
  EstimatorSpec estimator;
  std::vector<MetricSpec> metrics = {MetricSpec{"mcc"}};
  std::optional<SweepSpec> sweep;
  std::string output_dir;  // empty: $SLOWLAB_OUT, then "results"
  int threads = 0;         // 0: hardware concurrency
  bool save_checkpoints = false;
  bool save_latents = false;

  void validate() const;
};

// Missing keys take defaults; unknown keys throw ConfigError naming the key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

// FNV-1a over the canonical JSON of everything that affects results
// (output_dir, threads and save flags excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

// Copy of `c` with the sweep axis set to `value`.
ExperimentConfig apply_axis(const ExperimentConfig& c, const std::string& axis, double value);

std::string default_output_dir();

// Estimator configs with dimensions filled in from the dataset. Throw
// ConfigError on bad network options.
int observation_dim(const DatasetSpec& d);
est::FlowConfig flow_config(const ExperimentConfig& c);
est::VaeConfig vae_config(const ExperimentConfig& c);
est::PclConfig pcl_config(const ExperimentConfig& c);

}  // namespace slowlab::harness

#endif  // SLOWLAB_HARNESS_CONFIG_HPP_
