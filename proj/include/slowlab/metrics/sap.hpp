#ifndef SLOWLAB_METRICS_SAP_HPP_
#define SLOWLAB_METRICS_SAP_HPP_

#include "slowlab/metrics/mcc.hpp"

namespace slowlab::metrics {

struct SapOptions {
  double train_fraction = 0.8;
  int classifier_steps = 300;
  double learning_rate = 0.5;
};

struct SapReport {
  Matrix scores;  // D' x D held-out predictability
  double score = 0.0;
};

// Single-latent predictors: categorical factors use a 1-D multinomial
// logistic classifier (held-out accuracy), continuous and circular factors
// a single-threshold regression stump (held-out R^2, floored at 0).
// SAP is the mean over factors of the gap between the two best latents.
SapReport sap(const MetricInput& input, const SapOptions& options = {});

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_SAP_HPP_
