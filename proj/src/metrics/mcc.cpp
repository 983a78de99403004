#include "slowlab/metrics/mcc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "slowlab/metrics/assignment.hpp"

namespace slowlab::metrics {

void MetricInput::validate() const {
  require(latents.rows() == factors.rows(), "metric input: latents and factors differ in length");
  require(latents.rows() >= 2, "metric input: need at least 2 samples");
  require(latents.cols() >= 1 && factors.cols() >= 1, "metric input: empty latents or factors");
  require(factor_kinds.empty() || factor_kinds.size() == static_cast<std::size_t>(factors.cols()),
          "metric input: factor_kinds length must match the factor count");
  require(latents.allFinite() && factors.allFinite(), "metric input: non-finite values");
}

namespace {

constexpr int kMaxRelabelCategories = 8;

// Best |corr| between `t` (already rank-transformed for Spearman) and the
// categorical factor `f` over all relabelings of its categories.
double best_relabel_corr(const Vector& t, const Vector& f, Correlation kind) {
  std::map<long, int> index;
  for (Eigen::Index i = 0; i < f.size(); ++i) index.emplace(std::lround(f[i]), 0);
  int k = 0;
  for (auto& [code, idx] : index) idx = k++;
  std::vector<double> count(k, 0.0), sum(k, 0.0);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const int c = index.at(std::lround(f[i]));
    count[c] += 1.0;
    sum[c] += t[i];
  }
  const double n = static_cast<double>(t.size());
  const double tbar = t.mean();
  const double stt = (t.array() - tbar).square().sum();
  if (stt <= 0.0 || k < 2) return 0.0;

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> g(k);
  std::vector<int> by_label(k);
  double best = 0.0;
  do {
    if (kind == Correlation::kPearson) {
      for (int c = 0; c < k; ++c) g[c] = perm[c];
    } else {
      for (int c = 0; c < k; ++c) by_label[perm[c]] = c;
      double before = 0.0;
      for (int l = 0; l < k; ++l) {
        const int c = by_label[l];
        g[c] = before + 0.5 * (count[c] + 1.0);
        before += count[c];
      }
    }
    double gsum = 0.0, gg = 0.0, gt = 0.0;
    for (int c = 0; c < k; ++c) {
      gsum += count[c] * g[c];
      gg += count[c] * g[c] * g[c];
      gt += g[c] * sum[c];
    }
    const double gbar = gsum / n;
    const double sgg = gg - n * gbar * gbar;
    if (sgg <= 0.0) continue;
    const double r = (gt - n * gbar * tbar) / std::sqrt(sgg * stt);
    best = std::max(best, std::min(1.0, std::abs(r)));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

int category_count(const Vector& f) {
  std::vector<long> codes(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) codes[i] = std::lround(f[i]);
  std::sort(codes.begin(), codes.end());
  return static_cast<int>(std::unique(codes.begin(), codes.end()) - codes.begin());
}

}  // namespace

MccReport mcc(const MetricInput& input, const MccOptions& options, Rng& rng) {
  input.validate();
  const Eigen::Index n = input.latents.rows();
  const int dl = static_cast<int>(input.latents.cols());
  const int df = static_cast<int>(input.factors.cols());
  require(dl >= df, "mcc: needs at least as many latents as factors");

  Matrix padded(n, dl);
  padded.leftCols(df) = input.factors;
  std::normal_distribution<double> normal;
  for (int j = df; j < dl; ++j)
    for (Eigen::Index i = 0; i < n; ++i) padded(i, j) = normal(rng);

  MccReport report;
  std::vector<int> constant;
  Matrix corr = abs_correlation_matrix(input.latents, padded, options.correlation, &constant);
  for (int c : constant)
    report.warnings.push_back("latent " + std::to_string(c) + " is constant; correlations set to 0");

  if (options.categorical_relabel) {
    for (int j = 0; j < df; ++j) {
      if (input.kind(j) != FactorKind::kCategorical) continue;
      const Vector f = input.factors.col(j);
      if (category_count(f) > kMaxRelabelCategories) {
        report.warnings.push_back("factor " + std::to_string(j) +
                                  " has too many categories for relabeling; skipped");
        continue;
      }
      for (int i = 0; i < dl; ++i) {
        const Vector t = options.correlation == Correlation::kSpearman
                             ? fractional_ranks(input.latents.col(i))
                             : Vector(input.latents.col(i));
        corr(i, j) = best_relabel_corr(t, f, options.correlation);
      }
    }
  }

  const std::vector<int> latent_to_factor = max_weight_assignment(corr);
  report.assignment.assign(df, -1);
  for (int i = 0; i < dl; ++i)
    if (latent_to_factor[i] < df) report.assignment[latent_to_factor[i]] = i;
  double total = 0.0;
  for (int j = 0; j < df; ++j) {
    const double c = corr(report.assignment[j], j);
    report.matched.push_back(c);
    total += c;
  }
  report.correlations = corr.leftCols(df);
  report.score = 100.0 * total / df;
  return report;
}

}  // namespace slowlab::metrics
