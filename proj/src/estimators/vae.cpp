#include "slowlab/estimators/vae.hpp"

#include <cmath>
#include <numbers>

namespace slowlab::est {

using grad::Tape;
using grad::Var;

void VaeConfig::validate() const {
  require(x_dim >= 1 && latent_dim >= 1, "vae: dimensions must be >= 1");
  require(encoder != NetKind::kIdentity && decoder != NetKind::kIdentity,
          "vae: encoder and decoder must be linear or mlp");
  require(hidden >= 1, "vae: hidden must be >= 1");
  require(obs_sigma > 0.0, "vae: obs_sigma must be positive");
}

nlohmann::json to_json(const VaeConfig& c) {
  return {{"x_dim", c.x_dim},
          {"latent_dim", c.latent_dim},
          {"encoder", to_string(c.encoder)},
          {"decoder", to_string(c.decoder)},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"obs_sigma", c.obs_sigma}};
}

VaeConfig vae_config_from_json(const nlohmann::json& j) {
  VaeConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "x_dim") c.x_dim = value.get<int>();
    else if (key == "latent_dim") c.latent_dim = value.get<int>();
    else if (key == "encoder") c.encoder = net_kind_from_string(value.get<std::string>());
    else if (key == "decoder") c.decoder = net_kind_from_string(value.get<std::string>());
    else if (key == "hidden") c.hidden = value.get<int>();
    else if (key == "activation") c.activation = activation_from_string(value.get<std::string>());
    else if (key == "obs_sigma") c.obs_sigma = value.get<double>();
    else throw InvalidArgument("vae config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

Mlp VaeModel::encoder_net() const {
  if (config_.encoder == NetKind::kLinear)
    return Mlp{"enc", {config_.x_dim, 2 * config_.latent_dim}, config_.activation};
  return Mlp{"enc", {config_.x_dim, config_.hidden, 2 * config_.latent_dim}, config_.activation};
}

Mlp VaeModel::decoder_net() const {
  if (config_.decoder == NetKind::kLinear)
    return Mlp{"dec", {config_.latent_dim, config_.x_dim}, config_.activation};
  return Mlp{"dec", {config_.latent_dim, config_.hidden, config_.x_dim}, config_.activation};
}

VaeModel::VaeModel(const VaeConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  encoder_net().init(store_, rng, 0.5);
  decoder_net().init(store_, rng, 0.5);
}

Posterior VaeModel::encode(Tape& tape, Var x) {
  Var out = encoder_net().forward(tape, store_, x);
  return {grad::slice_cols(out, 0, config_.latent_dim),
          grad::slice_cols(out, config_.latent_dim, config_.latent_dim)};
}

Var VaeModel::decode(Tape& tape, Var z) { return decoder_net().forward(tape, store_, z); }

Matrix VaeModel::encode_mean(const Matrix& x) {
  Tape tape;
  return encode(tape, tape.constant(x)).mu.value();
}

Matrix VaeModel::encode_sigma(const Matrix& x) {
  Tape tape;
  return (0.5 * encode(tape, tape.constant(x)).logvar.value()).array().exp();
}

void VaeObjective::validate() const {
  require(gamma > 0.0, "vae objective: gamma must be positive");
  require(lambda > 0.0, "vae objective: lambda must be positive");
}

namespace {

// Batch-mean KL(q || N(0, I)).
Var marginal_kl(const Posterior& q, double n) {
  Var terms = grad::square(q.mu) + grad::exp(q.logvar) - q.logvar;
  return (0.5 / n) * grad::sum(terms) - 0.5 * static_cast<double>(q.mu.cols());
}

// Batch-mean -H(q_t) + H(q_t, Laplace(mu_prev, 1/lambda)).
Var laplace_transition_kl(const Posterior& qt, const Posterior& qp, double lambda, double n) {
  Var sigma = grad::exp(0.5 * qt.logvar);
  Var fold = grad::folded_normal_mean(qt.mu - qp.mu, sigma);
  const double per_dim = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) - std::log(lambda / 2.0);
  return (1.0 / n) * grad::sum(lambda * fold - 0.5 * qt.logvar) + per_dim * static_cast<double>(qt.mu.cols());
}

// Batch-mean KL(q_t || q_prev) between diagonal Gaussians.
Var gaussian_transition_kl(const Posterior& qt, const Posterior& qp, double n) {
  Var ratio = (grad::exp(qt.logvar) + grad::square(qt.mu - qp.mu)) * grad::exp(-qp.logvar);
  return (0.5 / n) * grad::sum(qp.logvar - qt.logvar + ratio) - 0.5 * static_cast<double>(qt.mu.cols());
}

Var transition_kl(const Posterior& qt, const Posterior& qp, const VaeObjective& obj, double n) {
  return obj.prior == TransitionPrior::kLaplace ? laplace_transition_kl(qt, qp, obj.lambda, n)
                                                : gaussian_transition_kl(qt, qp, n);
}

}  // namespace

VaeLossTerms vae_loss(Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                      const VaeObjective& objective, const Matrix& noise_prev,
                      const Matrix& noise_next) {
  objective.validate();
  batch.validate();
  const VaeConfig& cfg = model.config();
  require(batch.dim() == cfg.x_dim, "vae_loss: batch width does not match x_dim");
  require(noise_prev.rows() == batch.count() && noise_prev.cols() == cfg.latent_dim &&
              noise_next.rows() == batch.count() && noise_next.cols() == cfg.latent_dim,
          "vae_loss: noise shape mismatch");
  const double n = static_cast<double>(batch.count());
  Var x0 = tape.constant(batch.prev);
  Var x1 = tape.constant(batch.next);
  const Posterior q0 = model.encode(tape, x0);
  const Posterior q1 = model.encode(tape, x1);
  Var z0 = q0.mu + grad::exp(0.5 * q0.logvar) * tape.constant(noise_prev);
  Var z1 = q1.mu + grad::exp(0.5 * q1.logvar) * tape.constant(noise_next);

  const double s2 = cfg.obs_sigma * cfg.obs_sigma;
  Var sq = grad::sum(grad::square(model.decode(tape, z0) - x0)) +
           grad::sum(grad::square(model.decode(tape, z1) - x1));
  VaeLossTerms terms;
  terms.reconstruction = (0.5 / (s2 * n)) * sq + cfg.x_dim * std::log(2.0 * std::numbers::pi * s2);

  if (objective.bidirectional) {
    terms.kl_marginal = 0.5 * (marginal_kl(q0, n) + marginal_kl(q1, n));
    terms.kl_transition = 0.5 * (transition_kl(q1, q0, objective, n) + transition_kl(q0, q1, objective, n));
  } else {
    terms.kl_marginal = marginal_kl(q0, n);
    terms.kl_transition = transition_kl(q1, q0, objective, n);
  }
  terms.total = terms.reconstruction + terms.kl_marginal + objective.gamma * terms.kl_transition;
  return terms;
}

VaeLossTerms vae_loss(Tape& tape, VaeModel& model, const synth::PairBatch& batch,
                      const VaeObjective& objective, Rng& rng) {
  const Eigen::Index n = batch.count();
  const int d = model.config().latent_dim;
  const Matrix e0 = normal_matrix(n, d, 1.0, rng);
  const Matrix e1 = normal_matrix(n, d, 1.0, rng);
  return vae_loss(tape, model, batch, objective, e0, e1);
}

VaeLossTerms slowvae_loss(Tape& tape, VaeModel& model, const synth::PairBatch& batch, double gamma,
                          double lambda, Rng& rng, bool bidirectional) {
  return vae_loss(tape, model, batch, VaeObjective{gamma, lambda, bidirectional, TransitionPrior::kLaplace}, rng);
}

VaeLossTerms pmvae_loss(Tape& tape, VaeModel& model, const synth::PairBatch& batch, double gamma,
                        Rng& rng, bool bidirectional) {
  return vae_loss(tape, model, batch,
                  VaeObjective{gamma, 1.0, bidirectional, TransitionPrior::kPosteriorMatching}, rng);
}

double gaussian_kl(double mu_t, double sigma_t, double mu_p, double sigma_p) {
  require(sigma_t > 0.0 && sigma_p > 0.0, "gaussian_kl: sigmas must be positive");
  return std::log(sigma_p / sigma_t) +
         (sigma_t * sigma_t + (mu_t - mu_p) * (mu_t - mu_p)) / (2.0 * sigma_p * sigma_p) - 0.5;
}

}  // namespace slowlab::est
