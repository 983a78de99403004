#ifndef SLOWLAB_ESTIMATORS_FLOW_HPP_
#define SLOWLAB_ESTIMATORS_FLOW_HPP_

#include <json.hpp>

#include "slowlab/estimators/nets.hpp"
#include "slowlab/gradcore/tape.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::est {

enum class FlowKind { kLinear, kCoupling };

struct FlowConfig {
  FlowKind kind = FlowKind::kLinear;
  int dim = 2;
  int blocks = 6;          // coupling only
  int hidden = 64;         // coupling MLP width
  Activation activation = Activation::kRelu;
  bool linear_layers = true;  // coupling only: learnable W before and after the blocks

  void validate() const;
};

nlohmann::json to_json(const FlowConfig& c);
FlowConfig flow_config_from_json(const nlohmann::json& j);

// Maps observations x (rows) to latents z = f(x). Linear: z = x W^T with W
// initialized orthogonal. Coupling: additive blocks alternating which half of
// the coordinates is shifted by an MLP of the other half (unit Jacobian).
class FlowModel {
 public:
  FlowModel(const FlowConfig& config, Rng& rng);

  const FlowConfig& config() const { return config_; }
  grad::ParamStore& params() { return store_; }
  const grad::ParamStore& params() const { return store_; }

  grad::Var forward(grad::Tape& tape, grad::Var x);
  // log|det df/dx|, identical for every input (1x1).
  grad::Var log_det(grad::Tape& tape);

  Matrix transform(const Matrix& x);
  Matrix inverse(const Matrix& z);

 private:
  Mlp block_net(int k) const;
  int half(int k) const;  // number of conditioning coordinates of block k

  FlowConfig config_;
  grad::ParamStore store_;
};

// Batch-mean negative log-likelihood of observed pairs under a Gaussian
// marginal for f(x_prev) and generalized Laplace(alpha, lambda) transitions.
grad::Var slowflow_nll(grad::Tape& tape, FlowModel& flow, const synth::PairBatch& batch,
                       double lambda, double alpha = 1.0);
double slowflow_nll_value(FlowModel& flow, const synth::PairBatch& batch, double lambda,
                          double alpha = 1.0);

// Same objective evaluated at the true latents, i.e. with the true demixer:
// mean of -log p(z_prev, z_next) minus the mixing's log-Jacobian terms.
double pair_nll_latent(const synth::PairBatch& latents, double lambda, double alpha = 1.0);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_FLOW_HPP_
