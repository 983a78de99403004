#include "slowlab/metrics/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace slowlab::metrics {

Vector fractional_ranks(const Vector& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Vector ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const Vector& x, const Vector& y) {
  require(x.size() == y.size(), "pearson: length mismatch");
  require(x.size() >= 2, "pearson: need at least 2 samples");
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const Vector& x, const Vector& y) {
  return pearson(fractional_ranks(x), fractional_ranks(y));
}

namespace {

bool is_constant(const Vector& v) {
  return v.size() == 0 || v.maxCoeff() == v.minCoeff();
}

// Centred, unit-norm columns (zero column when constant).
Matrix normalized_columns(const Matrix& m, Correlation kind) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Vector c = kind == Correlation::kSpearman ? fractional_ranks(m.col(j)) : Vector(m.col(j));
    c.array() -= c.mean();
    const double norm = c.norm();
    out.col(j) = norm > 0.0 ? Vector(c / norm) : Vector::Zero(m.rows());
  }
  return out;
}

}  // namespace

Matrix abs_correlation_matrix(const Matrix& a, const Matrix& b, Correlation kind,
                              std::vector<int>* constant_cols_a) {
  require(a.rows() == b.rows(), "abs_correlation_matrix: row count mismatch");
  require(a.rows() >= 2, "abs_correlation_matrix: need at least 2 samples");
  if (constant_cols_a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (is_constant(a.col(j))) constant_cols_a->push_back(static_cast<int>(j));
  }
  const Matrix na = normalized_columns(a, kind);
  const Matrix nb = normalized_columns(b, kind);
  return (na.transpose() * nb).cwiseAbs().cwiseMin(1.0);
}

}  // namespace slowlab::metrics
