#include "slowlab/metrics/information.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace slowlab::metrics {

std::vector<int> discretize_equal_width(const Vector& x, int bins) {
  require(bins >= 1, "discretize_equal_width: bins must be >= 1");
  std::vector<int> out(x.size(), 0);
  if (x.size() == 0) return out;
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (!(hi > lo)) return out;
  const double width = (hi - lo) / bins;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int b = static_cast<int>(std::floor((x[i] - lo) / width));
    out[i] = std::clamp(b, 0, bins - 1);
  }
  return out;
}

std::vector<int> discretize_quantile(const Vector& x, int bins) {
  require(bins >= 1, "discretize_quantile: bins must be >= 1");
  const Vector ranks = fractional_ranks(x);
  const double n = static_cast<double>(x.size());
  std::vector<int> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int b = static_cast<int>(std::floor((ranks[i] - 1.0) * bins / n));
    out[i] = std::clamp(b, 0, bins - 1);
  }
  return out;
}

std::vector<int> as_codes(const Vector& x) {
  std::vector<int> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = static_cast<int>(std::lround(x[i]));
  return out;
}

// Both estimators walk the cells in sorted order and use the same per-cell
// arithmetic, so discrete_mi(a, a) == entropy(a) bit for bit.
double entropy(std::span<const int> a) {
  require(!a.empty(), "entropy: empty input");
  std::map<int, double> counts;
  for (int v : a) counts[v] += 1.0;
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = c / n;
    const double lp = std::log(p);
    h += p * ((lp - lp) - lp);
  }
  return h;
}

double discrete_mi(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size(), "discrete_mi: length mismatch");
  require(!a.empty(), "discrete_mi: empty input");
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [cell, c] : joint) {
    const double p = c / n;
    mi += p * ((std::log(p) - std::log(ca[cell.first] / n)) - std::log(cb[cell.second] / n));
  }
  return std::max(mi, 0.0);
}

std::vector<int> factor_codes(const MetricInput& input, int j, int bins) {
  if (input.kind(j) == FactorKind::kCategorical) return as_codes(input.factors.col(j));
  return discretize_quantile(input.factors.col(j), bins);
}

Matrix mutual_information_matrix(const MetricInput& input, int bins) {
  input.validate();
  const int dl = static_cast<int>(input.latents.cols());
  const int df = static_cast<int>(input.factors.cols());
  std::vector<std::vector<int>> lat(dl), fac(df);
  for (int i = 0; i < dl; ++i) lat[i] = discretize_equal_width(input.latents.col(i), bins);
  for (int j = 0; j < df; ++j) fac[j] = factor_codes(input, j, bins);
  Matrix mi(dl, df);
  for (int i = 0; i < dl; ++i)
    for (int j = 0; j < df; ++j) mi(i, j) = discrete_mi(lat[i], fac[j]);
  return mi;
}

double mig_from_mi(const Matrix& mi, const Vector& factor_entropy) {
  require(mi.cols() == factor_entropy.size(), "mig: entropy length mismatch");
  require(mi.rows() >= 2, "mig: needs at least 2 latents");
  double total = 0.0;
  for (Eigen::Index j = 0; j < mi.cols(); ++j) {
    if (factor_entropy[j] <= 0.0) continue;  // constant factor contributes 0
    std::vector<double> col(mi.col(j).data(), mi.col(j).data() + mi.rows());
    std::partial_sort(col.begin(), col.begin() + 2, col.end(), std::greater<>());
    total += (col[0] - col[1]) / factor_entropy[j];
  }
  return total / static_cast<double>(mi.cols());
}

double mig(const MetricInput& input, int bins) {
  const Matrix mi = mutual_information_matrix(input, bins);
  Vector h(input.factors.cols());
  for (Eigen::Index j = 0; j < h.size(); ++j) h[j] = entropy(factor_codes(input, static_cast<int>(j), bins));
  return mig_from_mi(mi, h);
}

double modularity_from_mi(const Matrix& mi) {
  const Eigen::Index df = mi.cols();
  require(df >= 2, "modularity: needs at least 2 factors");
  double total = 0.0;
  for (Eigen::Index i = 0; i < mi.rows(); ++i) {
    const RowVector sq = mi.row(i).array().square();
    Eigen::Index best = 0;
    const double theta2 = sq.maxCoeff(&best);
    if (theta2 <= 0.0) continue;  // uninformative latent scores 0
    const double off = sq.sum() - sq[best];
    const double delta = off / (theta2 * static_cast<double>(df - 1));
    total += 1.0 - delta;
  }
  return total / static_cast<double>(mi.rows());
}

double modularity(const MetricInput& input, int bins) {
  return modularity_from_mi(mutual_information_matrix(input, bins));
}

}  // namespace slowlab::metrics
