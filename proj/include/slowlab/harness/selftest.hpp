#ifndef SLOWLAB_HARNESS_SELFTEST_HPP_
#define SLOWLAB_HARNESS_SELFTEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "slowlab/gradcore/optim.hpp"

namespace slowlab::harness {

// One closed-form value against its Monte-Carlo (or quadrature) reference.
struct SuiteCheck {
  std::string term;
  int config = 0;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;  // 3 standard errors, or relative error bound
  bool pass = false;
};

struct ClosedFormSuite {
  std::vector<SuiteCheck> checks;
  double seconds = 0.0;

  std::size_t failures() const;
};

// For each random configuration: Gaussian KL to N(0,1), Gaussian entropy,
// folded-normal mean, Laplace cross-entropy and the assembled pair KL
// (d = 3) against `samples`-draw Monte-Carlo means within 3 standard errors,
// plus the folded-normal mean against adaptive quadrature (rel. err 1e-8).
ClosedFormSuite closed_form_suite(int configs = 50, std::size_t samples = 1000000, std::uint64_t seed = 0);

struct GradientCheck {
  std::string estimator;
  std::string stage;  // "init" or "trained"
  grad::GradCheckResult result;
  bool pass = false;
};

// Finite-difference checks of every estimator loss on d = 4 instances,
// at initialization and after 100 Adam steps.
std::vector<GradientCheck> gradient_suite(std::uint64_t seed = 0, double tolerance = 1e-4);

}  // namespace slowlab::harness

#endif  // SLOWLAB_HARNESS_SELFTEST_HPP_
