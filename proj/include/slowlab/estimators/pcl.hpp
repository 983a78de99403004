#ifndef SLOWLAB_ESTIMATORS_PCL_HPP_
#define SLOWLAB_ESTIMATORS_PCL_HPP_

#include <vector>

#include <json.hpp>

#include "slowlab/estimators/nets.hpp"
#include "slowlab/gradcore/tape.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::est {

struct PclConfig {
  int dim = 2;
  NetKind encoder = NetKind::kMlp;
  int hidden = 64;
  int hidden_layers = 1;
  Activation activation = Activation::kRelu;

  void validate() const;
};

nlohmann::json to_json(const PclConfig& c);
PclConfig pcl_config_from_json(const nlohmann::json& j);

// Discriminator r(x, x') = sum_i [-w_i |h_i(x') - h_i(x)| + a_i h_i(x')^2
// + b_i h_i(x)^2] + c over encoder features h. The head starts at zero.
class PclModel {
 public:
  PclModel(const PclConfig& config, Rng& rng);

  const PclConfig& config() const { return config_; }
  grad::ParamStore& params() { return store_; }
  const grad::ParamStore& params() const { return store_; }

  grad::Var features(grad::Tape& tape, grad::Var x);
  grad::Var logits(grad::Tape& tape, grad::Var x_prev, grad::Var x_next);  // N x 1
  Matrix encode(const Matrix& x);

 private:
  Mlp encoder_net() const;

  PclConfig config_;
  grad::ParamStore store_;
};

// Logistic loss over true pairs and pairs whose next rows follow `permutation`.
grad::Var pcl_loss(grad::Tape& tape, PclModel& model, const synth::PairBatch& batch,
                   const std::vector<int>& permutation);
grad::Var pcl_loss(grad::Tape& tape, PclModel& model, const synth::PairBatch& batch, Rng& rng);

// Fraction of true and permuted pairs classified correctly (ties count half).
double pcl_accuracy(PclModel& model, const synth::PairBatch& batch, Rng& rng);

// Random permutation with no fixed points; needs n >= 2.
std::vector<int> derangement(std::size_t n, Rng& rng);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_PCL_HPP_
