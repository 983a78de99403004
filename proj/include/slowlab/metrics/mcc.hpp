#ifndef SLOWLAB_METRICS_MCC_HPP_
#define SLOWLAB_METRICS_MCC_HPP_

#include <string>
#include <vector>

#include "slowlab/common.hpp"
#include "slowlab/metrics/correlation.hpp"

namespace slowlab::metrics {

enum class FactorKind { kContinuous, kCategorical, kCircular };

// latents: N x D' encoder means; factors: N x D ground truth.
struct MetricInput {
  Matrix latents;
  Matrix factors;
  std::vector<FactorKind> factor_kinds;  // empty means all continuous

  FactorKind kind(int j) const {
    return factor_kinds.empty() ? FactorKind::kContinuous : factor_kinds[j];
  }
  void validate() const;
};

struct MccOptions {
  Correlation correlation = Correlation::kSpearman;
  // For categorical factors with at most 8 categories, score each latent
  // against the best relabeling of the categories (brute force).
  bool categorical_relabel = false;
};

struct MccReport {
  Matrix correlations;            // D' x D, absolute values
  std::vector<int> assignment;    // factor j -> latent index
  std::vector<double> matched;    // |corr| of each factor with its latent
  double score = 0.0;             // 100 * mean(matched)
  std::vector<std::string> warnings;
};

// Pads the factors with D' - D standard-normal noise columns, solves the
// max-weight assignment on the padded |corr| matrix and averages only the D
// true-factor matches.
MccReport mcc(const MetricInput& input, const MccOptions& options, Rng& rng);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_MCC_HPP_
