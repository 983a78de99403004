#include "slowlab/estimators/pcl.hpp"

#include <numeric>

namespace slowlab::est {

using grad::Tape;
using grad::Var;

void PclConfig::validate() const {
  require(dim >= 1, "pcl: dim must be >= 1");
  require(hidden >= 1 && hidden_layers >= 1, "pcl: hidden sizes must be >= 1");
}

nlohmann::json to_json(const PclConfig& c) {
  return {{"dim", c.dim},
          {"encoder", to_string(c.encoder)},
          {"hidden", c.hidden},
          {"hidden_layers", c.hidden_layers},
          {"activation", to_string(c.activation)}};
}

PclConfig pcl_config_from_json(const nlohmann::json& j) {
  PclConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "dim") c.dim = value.get<int>();
    else if (key == "encoder") c.encoder = net_kind_from_string(value.get<std::string>());
    else if (key == "hidden") c.hidden = value.get<int>();
    else if (key == "hidden_layers") c.hidden_layers = value.get<int>();
    else if (key == "activation") c.activation = activation_from_string(value.get<std::string>());
    else throw InvalidArgument("pcl config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

Mlp PclModel::encoder_net() const {
  std::vector<int> sizes{config_.dim};
  if (config_.encoder == NetKind::kMlp)
    for (int i = 0; i < config_.hidden_layers; ++i) sizes.push_back(config_.hidden);
  sizes.push_back(config_.dim);
  return Mlp{"enc", sizes, config_.activation};
}

PclModel::PclModel(const PclConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.encoder != NetKind::kIdentity) encoder_net().init(store_, rng);
  store_.add("head.w", Matrix::Zero(1, config_.dim));
  store_.add("head.a", Matrix::Zero(1, config_.dim));
  store_.add("head.b", Matrix::Zero(1, config_.dim));
  store_.add("head.c", Matrix::Zero(1, 1));
}

Var PclModel::features(Tape& tape, Var x) {
  require(x.cols() == config_.dim, "pcl: input width does not match dim");
  if (config_.encoder == NetKind::kIdentity) return x;
  return encoder_net().forward(tape, store_, x);
}

Var PclModel::logits(Tape& tape, Var x_prev, Var x_next) {
  Var h0 = features(tape, x_prev);
  Var h1 = features(tape, x_next);
  Var w = tape.param(store_.get("head.w"));
  Var a = tape.param(store_.get("head.a"));
  Var b = tape.param(store_.get("head.b"));
  Var per_dim = a * grad::square(h1) + b * grad::square(h0) - w * grad::abs(h1 - h0);
  return grad::sum_cols(per_dim) + tape.param(store_.get("head.c"));
}

Matrix PclModel::encode(const Matrix& x) {
  Tape tape;
  return features(tape, tape.constant(x)).value();
}

namespace {

Matrix permute_rows(const Matrix& m, const std::vector<int>& perm) {
  require(perm.size() == static_cast<std::size_t>(m.rows()), "pcl: permutation length mismatch");
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(perm[i]);
  return out;
}

}  // namespace

std::vector<int> derangement(std::size_t n, Rng& rng) {
  require(n >= 2, "pcl: batch too small to permute");
  // Sattolo's algorithm: a uniformly random single cycle, so no fixed points.
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  return p;
}

Var pcl_loss(Tape& tape, PclModel& model, const synth::PairBatch& batch,
             const std::vector<int>& permutation) {
  batch.validate();
  require(batch.count() >= 2, "pcl: batch too small to permute");
  Var x0 = tape.constant(batch.prev);
  Var pos = model.logits(tape, x0, tape.constant(batch.next));
  Var neg = model.logits(tape, x0, tape.constant(permute_rows(batch.next, permutation)));
  return grad::mean(grad::softplus(-pos)) + grad::mean(grad::softplus(neg));
}

Var pcl_loss(Tape& tape, PclModel& model, const synth::PairBatch& batch, Rng& rng) {
  return pcl_loss(tape, model, batch, derangement(static_cast<std::size_t>(batch.count()), rng));
}

double pcl_accuracy(PclModel& model, const synth::PairBatch& batch, Rng& rng) {
  const auto perm = derangement(static_cast<std::size_t>(batch.count()), rng);
  Tape tape;
  Var x0 = tape.constant(batch.prev);
  const Matrix pos = model.logits(tape, x0, tape.constant(batch.next)).value();
  const Matrix neg = model.logits(tape, x0, tape.constant(permute_rows(batch.next, perm))).value();
  double correct = 0.0;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    correct += pos(i, 0) > 0.0 ? 1.0 : (pos(i, 0) == 0.0 ? 0.5 : 0.0);
    correct += neg(i, 0) < 0.0 ? 1.0 : (neg(i, 0) == 0.0 ? 0.5 : 0.0);
  }
  return correct / (2.0 * pos.rows());
}

}  // namespace slowlab::est
