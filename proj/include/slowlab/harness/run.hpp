#ifndef SLOWLAB_HARNESS_RUN_HPP_
#define SLOWLAB_HARNESS_RUN_HPP_

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/harness/config.hpp"
#include "slowlab/harness/stats.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::harness {

struct TrainSummary {
  std::size_t steps = 0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;
  std::map<std::string, double> diagnostics;
  TrainSummary train;
  std::vector<std::string> artifacts;
};

struct ResultRecord {
  std::string name;
  std::string config_hash;
  nlohmann::json config;
  std::vector<SeedOutcome> seeds;
  std::map<std::string, Aggregate> aggregates;  // over successful seeds
  std::vector<std::string> artifacts;

  std::size_t failures() const;
  // Per-seed values of one metric (successful seeds, seed order).
  std::vector<double> values(const std::string& metric) const;
};

// Ground-truth sources, observations and the mixing for one seed.
struct Dataset {
  synth::PairBatch sources;
  synth::PairBatch observations;
  synth::MixingStack mixing;
  synth::PairBatch eval_sources;
  synth::PairBatch eval_observations;
};

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);

// One seed end to end. Stage errors are caught and stored in the outcome.
// Checkpoints and latents go to artifact_dir when requested by the config.
SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed,
                     const std::string& artifact_dir = "");

// All seeds (in parallel), aggregated in seed order. Writes only the
// per-seed artifacts. A tracks dataset is seed-independent and runs once.
ResultRecord run_experiment(const ExperimentConfig& config, const std::string& artifact_dir = "");

// Writes <dir>/result.json and <dir>/summary.csv; returns the paths and
// appends them to record.artifacts.
std::vector<std::string> write_record(ResultRecord& record, const std::string& dir);

nlohmann::json to_json(const ResultRecord& r);
// seed rows, then mean and sd rows; one column per metric.
std::string to_csv(const ResultRecord& r);
// Metric values only, for reproducibility comparisons.
nlohmann::json metrics_json(const ResultRecord& r);

// Directory used by run(): <output_dir>/<name>-<hash>.
std::string record_dir(const ExperimentConfig& config);

// run_experiment + write_record.
ResultRecord run(const ExperimentConfig& config);

}  // namespace slowlab::harness

#endif  // SLOWLAB_HARNESS_RUN_HPP_
