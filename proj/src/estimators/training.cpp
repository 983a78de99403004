#include "slowlab/estimators/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace slowlab::est {

using grad::Tape;
using grad::Var;

DivergenceError::DivergenceError(std::int64_t step, const std::string& what)
    : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

void TrainConfig::validate() const {
  require(steps >= 1, "train: steps must be >= 1");
  require(batch_size >= 2, "train: batch_size must be >= 2");
  require(log_every >= 1, "train: log_every must be >= 1");
  require(adam.lr > 0.0, "train: learning rate must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"steps", c.steps}, {"batch_size", c.batch_size}, {"lr", c.adam.lr}, {"log_every", c.log_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "steps") c.steps = value.get<std::size_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "lr") c.adam.lr = value.get<double>();
    else if (key == "log_every") c.log_every = value.get<std::size_t>();
    else throw InvalidArgument("train config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainLog& log) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : log.records)
    records.push_back({{"step", r.step},
                       {"loss", r.loss},
                       {"reconstruction", r.reconstruction},
                       {"kl_marginal", r.kl_marginal},
                       {"kl_transition", r.kl_transition}});
  return {{"seed", log.seed}, {"wall_seconds", log.wall_seconds}, {"records", records}};
}

BatchSampler::BatchSampler(const synth::PairBatch& data, std::size_t batch_size, Rng& rng)
    : data_(data), batch_size_(batch_size), rng_(rng), order_(data.count()) {
  data_.validate();
  require(data_.count() >= 2, "train: dataset needs at least 2 pairs");
  batch_size_ = std::min<std::size_t>(batch_size_, data_.count());
  std::iota(order_.begin(), order_.end(), 0);
  cursor_ = order_.size();
}

synth::PairBatch BatchSampler::next() {
  if (cursor_ + batch_size_ > order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  synth::PairBatch b;
  b.prev.resize(batch_size_, data_.dim());
  b.next.resize(batch_size_, data_.dim());
  for (std::size_t i = 0; i < batch_size_; ++i) {
    b.prev.row(i) = data_.prev.row(order_[cursor_ + i]);
    b.next.row(i) = data_.next.row(order_[cursor_ + i]);
  }
  cursor_ += batch_size_;
  return b;
}

namespace {

// Shared Adam loop. `step_loss` builds the loss for one minibatch and fills
// the record's term breakdown.
template <class StepLoss>
TrainLog run_training(grad::ParamStore& store, const synth::PairBatch& data, const TrainConfig& config,
                      Rng& rng, std::uint64_t seed, StepLoss&& step_loss) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  BatchSampler sampler(data, config.batch_size, rng);
  TrainLog log;
  log.seed = seed;
  for (std::size_t s = 1; s <= config.steps; ++s) {
    const synth::PairBatch batch = sampler.next();
    StepRecord rec;
    rec.step = static_cast<std::int64_t>(s);
    try {
      store.zero_grad();
      Tape tape;
      Var loss = step_loss(tape, batch, rec);
      rec.loss = loss.scalar();
      if (!std::isfinite(rec.loss)) throw DivergenceError(rec.step, "loss is not finite");
      tape.backward(loss);
      grad::adam_step(store, config.adam);
    } catch (const DivergenceError&) {
      throw;
    } catch (const Error& e) {
      throw DivergenceError(rec.step, e.what());
    }
    if (s == 1 || s % config.log_every == 0 || s == config.steps) log.records.push_back(rec);
  }
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

}  // namespace

TrainLog train_slowflow(FlowModel& flow, const synth::PairBatch& data, double lambda,
                        const TrainConfig& config, Rng& rng, std::uint64_t seed) {
  return run_training(flow.params(), data, config, rng, seed,
                      [&](Tape& tape, const synth::PairBatch& batch, StepRecord&) {
                        return slowflow_nll(tape, flow, batch, lambda, 1.0);
                      });
}

TrainLog train_vae(VaeModel& model, const synth::PairBatch& data, const VaeObjective& objective,
                   const TrainConfig& config, Rng& rng, std::uint64_t seed) {
  objective.validate();
  return run_training(model.params(), data, config, rng, seed,
                      [&](Tape& tape, const synth::PairBatch& batch, StepRecord& rec) {
                        const VaeLossTerms t = vae_loss(tape, model, batch, objective, rng);
                        rec.reconstruction = t.reconstruction.scalar();
                        rec.kl_marginal = t.kl_marginal.scalar();
                        rec.kl_transition = t.kl_transition.scalar();
                        return t.total;
                      });
}

TrainLog train_pcl(PclModel& model, const synth::PairBatch& data, const TrainConfig& config, Rng& rng,
                   std::uint64_t seed) {
  require(data.count() >= 2000, "pcl: dataset needs at least 2000 pairs");
  return run_training(model.params(), data, config, rng, seed,
                      [&](Tape& tape, const synth::PairBatch& batch, StepRecord&) {
                        return pcl_loss(tape, model, batch, rng);
                      });
}

}  // namespace slowlab::est
