#ifndef SLOWLAB_METRICS_ASSIGNMENT_HPP_
#define SLOWLAB_METRICS_ASSIGNMENT_HPP_

#include <vector>

#include "slowlab/common.hpp"

namespace slowlab::metrics {

// Hungarian (Kuhn-Munkres) solver with row/column potentials, O(n^2 m).
// Requires rows <= cols. Returns, for each row, the column assigned to it,
// minimizing the summed cost.
std::vector<int> linear_sum_assignment(const Matrix& cost);

// Same, maximizing the summed weight.
std::vector<int> max_weight_assignment(const Matrix& weight);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_ASSIGNMENT_HPP_
