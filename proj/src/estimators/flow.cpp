#include "slowlab/estimators/flow.hpp"

#include <cmath>
#include <numbers>

namespace slowlab::est {

using grad::Tape;
using grad::Var;

void FlowConfig::validate() const {
  require(dim >= 1, "flow: dim must be >= 1");
  if (kind == FlowKind::kCoupling) {
    require(dim >= 2, "flow: coupling flows need dim >= 2");
    require(blocks >= 1, "flow: blocks must be >= 1");
    require(hidden >= 1, "flow: hidden must be >= 1");
  }
}

nlohmann::json to_json(const FlowConfig& c) {
  return {{"kind", c.kind == FlowKind::kLinear ? "linear" : "coupling"},
          {"dim", c.dim},
          {"blocks", c.blocks},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"linear_layers", c.linear_layers}};
}

FlowConfig flow_config_from_json(const nlohmann::json& j) {
  FlowConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      const std::string k = value.get<std::string>();
      require(k == "linear" || k == "coupling", "flow: unknown kind '" + k + "'");
      c.kind = k == "linear" ? FlowKind::kLinear : FlowKind::kCoupling;
    } else if (key == "dim") {
      c.dim = value.get<int>();
    } else if (key == "blocks") {
      c.blocks = value.get<int>();
    } else if (key == "hidden") {
      c.hidden = value.get<int>();
    } else if (key == "activation") {
      c.activation = activation_from_string(value.get<std::string>());
    } else if (key == "linear_layers") {
      c.linear_layers = value.get<bool>();
    } else {
      throw InvalidArgument("flow config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

int FlowModel::half(int k) const {
  const int h = config_.dim / 2;
  return k % 2 == 0 ? h : config_.dim - h;
}

Mlp FlowModel::block_net(int k) const {
  const int cond = half(k);
  return Mlp{"block" + std::to_string(k), {cond, config_.hidden, config_.dim - cond},
             config_.activation};
}

FlowModel::FlowModel(const FlowConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.kind == FlowKind::kLinear) {
    store_.add("W", synth::random_orthogonal(config_.dim, rng));
    return;
  }
  if (config_.linear_layers) store_.add("W_in", synth::random_orthogonal(config_.dim, rng));
  for (int k = 0; k < config_.blocks; ++k) block_net(k).init(store_, rng, 0.0);
  if (config_.linear_layers) store_.add("W_out", Matrix::Identity(config_.dim, config_.dim));
}

Var FlowModel::forward(Tape& tape, Var x) {
  require(x.cols() == config_.dim, "flow: input width does not match dim");
  if (config_.kind == FlowKind::kLinear) return grad::matmul(x, tape.param(store_.get("W")));
  Var h = x;
  if (config_.linear_layers) h = grad::matmul(h, tape.param(store_.get("W_in")));
  for (int k = 0; k < config_.blocks; ++k) {
    const int cond = half(k);
    const int rest = config_.dim - cond;
    // Even blocks condition on the leading coordinates, odd ones on the trailing.
    if (k % 2 == 0) {
      Var a = grad::slice_cols(h, 0, cond);
      Var b = grad::slice_cols(h, cond, rest);
      h = grad::hcat(a, b + block_net(k).forward(tape, store_, a));
    } else {
      Var b = grad::slice_cols(h, 0, rest);
      Var a = grad::slice_cols(h, rest, cond);
      h = grad::hcat(b + block_net(k).forward(tape, store_, a), a);
    }
  }
  if (config_.linear_layers) h = grad::matmul(h, tape.param(store_.get("W_out")));
  return h;
}

Var FlowModel::log_det(Tape& tape) {
  if (config_.kind == FlowKind::kLinear) return grad::slogdet(tape.param(store_.get("W")));
  if (!config_.linear_layers) return tape.constant(Matrix::Zero(1, 1));
  return grad::slogdet(tape.param(store_.get("W_in"))) +
         grad::slogdet(tape.param(store_.get("W_out")));
}

Matrix FlowModel::transform(const Matrix& x) {
  Tape tape;
  return forward(tape, tape.constant(x)).value();
}

Matrix FlowModel::inverse(const Matrix& z) {
  require(z.cols() == config_.dim, "flow: input width does not match dim");
  if (config_.kind == FlowKind::kLinear) return z * store_.get("W").value.inverse();
  Matrix h = z;
  if (config_.linear_layers) h = h * store_.get("W_out").value.inverse();
  for (int k = config_.blocks - 1; k >= 0; --k) {
    const int cond = half(k);
    const int rest = config_.dim - cond;
    Tape tape;
    if (k % 2 == 0) {
      const Matrix shift = block_net(k).forward(tape, store_, tape.constant(h.leftCols(cond))).value();
      h.rightCols(rest) -= shift;
    } else {
      const Matrix shift = block_net(k).forward(tape, store_, tape.constant(h.rightCols(cond))).value();
      h.leftCols(rest) -= shift;
    }
  }
  if (config_.linear_layers) h = h * store_.get("W_in").value.inverse();
  return h;
}

namespace {

// -log of the generalized Laplace normalizer, per dimension.
double genlap_log_norm(double lambda, double alpha) {
  return std::log(alpha * lambda / (2.0 * std::tgamma(1.0 / alpha)));
}

}  // namespace

Var slowflow_nll(Tape& tape, FlowModel& flow, const synth::PairBatch& batch, double lambda,
                 double alpha) {
  require(lambda > 0.0 && alpha > 0.0, "slowflow_nll: lambda and alpha must be positive");
  batch.validate();
  require(batch.dim() == flow.config().dim, "slowflow_nll: flow must be square in the data dim");
  const double n = static_cast<double>(batch.count());
  const double d = static_cast<double>(batch.dim());
  Var z0 = flow.forward(tape, tape.constant(batch.prev));
  Var z1 = flow.forward(tape, tape.constant(batch.next));
  Var delta = z1 - z0;
  Var transition = alpha == 1.0 ? grad::abs(delta) : grad::abs_pow(delta, alpha);
  Var data_term = (0.5 / n) * grad::sum(grad::square(z0)) +
                  (std::pow(lambda, alpha) / n) * grad::sum(transition);
  const double constant = 0.5 * d * std::log(2.0 * std::numbers::pi) - d * genlap_log_norm(lambda, alpha);
  return data_term - 2.0 * flow.log_det(tape) + constant;
}

double slowflow_nll_value(FlowModel& flow, const synth::PairBatch& batch, double lambda, double alpha) {
  Tape tape;
  return slowflow_nll(tape, flow, batch, lambda, alpha).scalar();
}

double pair_nll_latent(const synth::PairBatch& latents, double lambda, double alpha) {
  latents.validate();
  const double d = static_cast<double>(latents.dim());
  const Matrix delta = latents.next - latents.prev;
  const double quad = 0.5 * latents.prev.array().square().rowwise().sum().mean();
  const double trans = std::pow(lambda, alpha) * delta.array().abs().pow(alpha).rowwise().sum().mean();
  return quad + trans + 0.5 * d * std::log(2.0 * std::numbers::pi) - d * genlap_log_norm(lambda, alpha);
}

}  // namespace slowlab::est
