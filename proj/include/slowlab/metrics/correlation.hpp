#ifndef SLOWLAB_METRICS_CORRELATION_HPP_
#define SLOWLAB_METRICS_CORRELATION_HPP_

#include "slowlab/common.hpp"

namespace slowlab::metrics {

enum class Correlation { kSpearman, kPearson };

// Fractional ranks (1-based); ties share their average rank.
Vector fractional_ranks(const Vector& x);

// Returns 0 when either input is constant.
double pearson(const Vector& x, const Vector& y);
double spearman(const Vector& x, const Vector& y);

// |corr(a.col(i), b.col(j))| for every column pair. Constant columns yield
// zeros; their indices are appended to `constant_cols_a` when provided.
Matrix abs_correlation_matrix(const Matrix& a, const Matrix& b, Correlation kind,
                              std::vector<int>* constant_cols_a = nullptr);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_CORRELATION_HPP_
