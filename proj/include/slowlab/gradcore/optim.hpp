#ifndef SLOWLAB_GRADCORE_OPTIM_HPP_
#define SLOWLAB_GRADCORE_OPTIM_HPP_

#include <functional>
#include <string>

#include "slowlab/gradcore/tape.hpp"

namespace slowlab::grad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update from the accumulated gradients. Increments
// store.step. Throws GradError on a non-finite gradient before touching any
// parameter.
void adam_step(ParamStore& store, const AdamConfig& config = {});

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // stencils that crossed a kink
};

using LossBuilder = std::function<Var(Tape&)>;

// Central finite differences on every parameter coordinate against
// backward(). Relative error uses max(|g|, 1e-8) as denominator.
// Coordinates whose +/-eps evaluations see different kink sign patterns are
// skipped and counted in `excluded`.
GradCheckResult grad_check(const LossBuilder& loss, ParamStore& store,
                           double eps = 1e-5);

}  // namespace slowlab::grad

#endif  // SLOWLAB_GRADCORE_OPTIM_HPP_
