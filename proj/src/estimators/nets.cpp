#include "slowlab/estimators/nets.hpp"

#include <cmath>

namespace slowlab::est {

using grad::Var;

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "smooth_leaky_relu";
}

std::string to_string(NetKind k) {
  switch (k) {
    case NetKind::kIdentity: return "identity";
    case NetKind::kLinear: return "linear";
    case NetKind::kMlp: return "mlp";
  }
  return "mlp";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "smooth_leaky_relu") return Activation::kSmoothLeakyRelu;
  throw InvalidArgument("unknown activation '" + s + "'");
}

NetKind net_kind_from_string(const std::string& s) {
  if (s == "identity") return NetKind::kIdentity;
  if (s == "linear") return NetKind::kLinear;
  if (s == "mlp") return NetKind::kMlp;
  throw InvalidArgument("unknown network kind '" + s + "'");
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sd * normal(rng);
  return m;
}

void Mlp::init(grad::ParamStore& store, Rng& rng, double last_gain) const {
  require(sizes.size() >= 2, "Mlp: needs input and output sizes");
  const std::size_t layers = sizes.size() - 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const double sd = std::sqrt(2.0 / sizes[i]) * (i + 1 == layers ? last_gain : 1.0);
    store.add(prefix + ".W" + std::to_string(i), normal_matrix(sizes[i], sizes[i + 1], sd, rng));
    store.add(prefix + ".b" + std::to_string(i), Matrix::Zero(1, sizes[i + 1]));
  }
}

Var Mlp::forward(grad::Tape& tape, grad::ParamStore& store, Var x) const {
  const std::size_t layers = sizes.size() - 1;
  Var h = x;
  for (std::size_t i = 0; i < layers; ++i) {
    h = grad::matmul(h, tape.param(store.get(prefix + ".W" + std::to_string(i)))) +
        tape.param(store.get(prefix + ".b" + std::to_string(i)));
    if (i + 1 < layers)
      h = activation == Activation::kRelu ? grad::relu(h) : grad::smooth_leaky_relu(h, leak);
  }
  return h;
}

}  // namespace slowlab::est
