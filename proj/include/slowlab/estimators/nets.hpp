#ifndef SLOWLAB_ESTIMATORS_NETS_HPP_
#define SLOWLAB_ESTIMATORS_NETS_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/common.hpp"
#include "slowlab/gradcore/tape.hpp"

namespace slowlab::est {

enum class Activation { kRelu, kSmoothLeakyRelu };
enum class NetKind { kIdentity, kLinear, kMlp };

std::string to_string(Activation a);
std::string to_string(NetKind k);
Activation activation_from_string(const std::string& s);
NetKind net_kind_from_string(const std::string& s);

// Dense layers "<prefix>.W<i>" (in x out) and "<prefix>.b<i>" (1 x out).
// Hidden activations follow every layer but the last.
struct Mlp {
  std::string prefix;
  std::vector<int> sizes;  // input, hidden..., output
  Activation activation = Activation::kRelu;
  double leak = 0.2;       // slope of the smooth leaky ReLU

  // He-scaled normal init; the last layer is scaled by `last_gain` (0 = zero init).
  void init(grad::ParamStore& store, Rng& rng, double last_gain = 1.0) const;
  grad::Var forward(grad::Tape& tape, grad::ParamStore& store, grad::Var x) const;
};

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Rng& rng);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_NETS_HPP_
