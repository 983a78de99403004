#ifndef SLOWLAB_HARNESS_SWEEPS_HPP_
#define SLOWLAB_HARNESS_SWEEPS_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/harness/run.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::harness {

// One row per axis value; one record per compared estimator.
struct SweepRow {
  double value = 0.0;
  std::vector<ResultRecord> records;
  // Two-estimator sweeps: t-test of the first vs second on `metric`.
  std::optional<TTest> comparison;
};

struct SweepTable {
  std::string name;
  std::string axis;
  std::string metric;  // headline metric compared across estimators
  std::vector<std::string> estimators;
  std::vector<SweepRow> rows;

  // Headline metric mean of estimator e at row r.
  double mean(std::size_t row, std::size_t estimator) const;
};

nlohmann::json to_json(const SweepTable& t);
std::string to_csv(const SweepTable& t);
// Writes <dir>/<name>.json and <dir>/<name>.csv.
std::vector<std::string> write_sweep(const SweepTable& t, const std::string& dir);

// Runs `base` once per axis value for every estimator variant.
SweepTable run_sweep(const std::string& name, const std::vector<ExperimentConfig>& variants,
                     const std::vector<std::string>& labels, const std::string& axis,
                     const std::vector<double>& values, const std::string& metric, int threads = 0);

struct SweepOptions {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool smoke = false;  // 2 seeds, shorter training
  int threads = 0;
};

// Mixing depth L vs PCL and SlowFlow on AR sources (pearson MCC).
ExperimentConfig ar_depth_slowflow(int dim);
ExperimentConfig ar_depth_pcl(int dim);
SweepTable sweep_ar_depth(int dim, const std::vector<int>& layers, const SweepOptions& options);

// Minor-axis scale kappa: SlowVAE vs linear SlowFlow with collapse diagnostics.
ExperimentConfig kappa_slowvae();
ExperimentConfig kappa_slowflow();
SweepTable sweep_kappa(const std::vector<double>& kappas, const SweepOptions& options);

// Transition shape alpha under orthogonal mixing, linear SlowFlow.
ExperimentConfig alpha_slowflow();
SweepTable sweep_alpha(const std::vector<double>& alphas, const SweepOptions& options);

// Observation width for SlowVAE and PM-VAE on d=5 sources.
ExperimentConfig expanding_vae(bool posterior_matching);

// Number-of-changing-factors histograms for LAP and UNI transitions.
struct LapHistogram {
  synth::FactorGrid grid;
  double lambda = 1.0;
  std::size_t samples = 0;
  std::vector<std::size_t> lap;  // index k: pairs changing exactly k factors
  std::vector<std::size_t> uni;
};

LapHistogram lap_histogram(const synth::FactorGrid& grid, double lambda, std::size_t samples,
                           std::uint64_t seed);
nlohmann::json to_json(const LapHistogram& h);
std::string to_csv(const LapHistogram& h);

}  // namespace slowlab::harness

#endif  // SLOWLAB_HARNESS_SWEEPS_HPP_
