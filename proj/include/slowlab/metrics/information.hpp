#ifndef SLOWLAB_METRICS_INFORMATION_HPP_
#define SLOWLAB_METRICS_INFORMATION_HPP_

#include <span>
#include <vector>

#include "slowlab/metrics/mcc.hpp"

namespace slowlab::metrics {

inline constexpr int kDefaultBins = 20;

// Equal-width histogram bins between min and max (max falls in the last bin).
std::vector<int> discretize_equal_width(const Vector& x, int bins = kDefaultBins);
// Rank-based bins holding ~N/bins samples each; ties stay together.
std::vector<int> discretize_quantile(const Vector& x, int bins = kDefaultBins);
// Rounds integer-coded values.
std::vector<int> as_codes(const Vector& x);

// Plug-in estimates in nats.
double entropy(std::span<const int> a);
double discrete_mi(std::span<const int> a, std::span<const int> b);

// Factor codes: categorical -> as-is, continuous / circular -> quantile bins.
std::vector<int> factor_codes(const MetricInput& input, int j, int bins = kDefaultBins);

// D' x D mutual information between equal-width-binned latents and factor codes.
Matrix mutual_information_matrix(const MetricInput& input, int bins = kDefaultBins);

double mig(const MetricInput& input, int bins = kDefaultBins);
double mig_from_mi(const Matrix& mi, const Vector& factor_entropy);

double modularity(const MetricInput& input, int bins = kDefaultBins);
double modularity_from_mi(const Matrix& mi);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_INFORMATION_HPP_
