#include "slowlab/gradcore/optim.hpp"

#include <cmath>
#include <vector>

namespace slowlab::grad {

void adam_step(ParamStore& store, const AdamConfig& config) {
  for (const auto& p : store.params()) {
    if (!p.grad.allFinite())
      throw GradError("non-finite gradient for parameter '" + p.name + "'");
  }
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& p : store.params()) {
    p.m = config.beta1 * p.m + (1.0 - config.beta1) * p.grad;
    p.v = config.beta2 * p.v + (1.0 - config.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config.lr * (p.m.array() / c1) /
                       ((p.v.array() / c2).sqrt() + config.eps);
  }
}

GradCheckResult grad_check(const LossBuilder& loss, ParamStore& store, double eps) {
  std::vector<Tensor> saved;
  for (const auto& p : store.params()) saved.push_back(p.grad);

  store.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<Tensor> analytic;
  for (const auto& p : store.params()) analytic.push_back(p.grad);

  auto evaluate = [&](std::uint64_t& signature) {
    Tape tape;
    tape.set_kink_tracking(true);
    const double v = loss(tape).scalar();
    signature = tape.kink_signature();
    return v;
  };

  GradCheckResult result;
  std::size_t k = 0;
  for (auto& p : store.params()) {
    const Tensor& g = analytic[k++];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.data()[i];
      std::uint64_t sig_plus = 0, sig_minus = 0;
      p.value.data()[i] = orig + eps;
      const double f_plus = evaluate(sig_plus);
      p.value.data()[i] = orig - eps;
      const double f_minus = evaluate(sig_minus);
      p.value.data()[i] = orig;
      if (sig_plus != sig_minus) {
        ++result.excluded;
        continue;
      }
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double an = g.data()[i];
      const double rel = std::abs(fd - an) / std::max(std::abs(an), 1e-8);
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }

  k = 0;
  for (auto& p : store.params()) p.grad = saved[k++];
  return result;
}

}  // namespace slowlab::grad
