#ifndef SLOWLAB_ESTIMATORS_VAE_HPP_
#define SLOWLAB_ESTIMATORS_VAE_HPP_

#include <json.hpp>

#include "slowlab/estimators/nets.hpp"
#include "slowlab/gradcore/tape.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::est {

struct VaeConfig {
  int x_dim = 2;
  int latent_dim = 2;
  NetKind encoder = NetKind::kMlp;
  NetKind decoder = NetKind::kMlp;
  int hidden = 64;
  Activation activation = Activation::kRelu;
  double obs_sigma = 0.1;  // fixed Gaussian likelihood scale

  void validate() const;
};

nlohmann::json to_json(const VaeConfig& c);
VaeConfig vae_config_from_json(const nlohmann::json& j);

struct Posterior {
  grad::Var mu;
  grad::Var logvar;  // sigma = exp(logvar / 2)
};

class VaeModel {
 public:
  VaeModel(const VaeConfig& config, Rng& rng);

  const VaeConfig& config() const { return config_; }
  grad::ParamStore& params() { return store_; }
  const grad::ParamStore& params() const { return store_; }

  Posterior encode(grad::Tape& tape, grad::Var x);
  grad::Var decode(grad::Tape& tape, grad::Var z);

  Matrix encode_mean(const Matrix& x);
  Matrix encode_sigma(const Matrix& x);

 private:
  Mlp encoder_net() const;
  Mlp decoder_net() const;

  VaeConfig config_;
  grad::ParamStore store_;
};

enum class TransitionPrior { kLaplace, kPosteriorMatching };

struct VaeObjective {
  double gamma = 10.0;
  double lambda = 6.0;
  bool bidirectional = true;
  TransitionPrior prior = TransitionPrior::kLaplace;

  void validate() const;
};

// Batch means; total = reconstruction + kl_marginal + gamma * kl_transition.
struct VaeLossTerms {
  grad::Var total;
  grad::Var reconstruction;
  grad::Var kl_marginal;
  grad::Var kl_transition;
};

// One reparameterized sample per input: z = mu + sigma * noise.
VaeLossTerms vae_loss(grad::Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                      const VaeObjective& objective, const Matrix& noise_prev,
                      const Matrix& noise_next);
VaeLossTerms vae_loss(grad::Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                      const VaeObjective& objective, Rng& rng);

// Laplace transition prior centred at the previous posterior mean.
VaeLossTerms slowvae_loss(grad::Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                          double gamma, double lambda, Rng& rng, bool bidirectional = true);
// Gaussian transition prior equal to the previous posterior.
VaeLossTerms pmvae_loss(grad::Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                        double gamma, Rng& rng, bool bidirectional = true);

// KL(N(mu_t, s_t^2) || N(mu_p, s_p^2)).
double gaussian_kl(double mu_t, double sigma_t, double mu_p, double sigma_p);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_VAE_HPP_
