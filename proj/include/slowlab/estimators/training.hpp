#ifndef SLOWLAB_ESTIMATORS_TRAINING_HPP_
#define SLOWLAB_ESTIMATORS_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "slowlab/estimators/flow.hpp"
#include "slowlab/estimators/pcl.hpp"
#include "slowlab/estimators/vae.hpp"
#include "slowlab/gradcore/optim.hpp"

namespace slowlab::est {

class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t step, const std::string& what);
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct TrainConfig {
  std::size_t steps = 10000;
  std::size_t batch_size = 256;
  grad::AdamConfig adam;
  std::size_t log_every = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  // VAE terms; zero for the other estimators.
  double reconstruction = 0.0;
  double kl_marginal = 0.0;
  double kl_transition = 0.0;
};

struct TrainLog {
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const TrainLog& log);

// Epoch-shuffled minibatches drawn from a fixed dataset.
class BatchSampler {
 public:
  BatchSampler(const synth::PairBatch& data, std::size_t batch_size, Rng& rng);
  synth::PairBatch next();

 private:
  const synth::PairBatch& data_;
  std::size_t batch_size_;
  Rng& rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

TrainLog train_slowflow(FlowModel& flow, const synth::PairBatch& data, double lambda,
                        const TrainConfig& config, Rng& rng, std::uint64_t seed = 0);
TrainLog train_vae(VaeModel& model, const synth::PairBatch& data, const VaeObjective& objective,
                   const TrainConfig& config, Rng& rng, std::uint64_t seed = 0);
TrainLog train_pcl(PclModel& model, const synth::PairBatch& data, const TrainConfig& config,
                   Rng& rng, std::uint64_t seed = 0);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_TRAINING_HPP_
