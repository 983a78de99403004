#include "slowlab/metrics/sap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace slowlab::metrics {
namespace {

double stump_r2(const Vector& x_train, const Vector& y_train, const Vector& x_test,
                const Vector& y_test) {
  const Eigen::Index n = x_train.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x_train[a] < x_train[b]; });
  const double total = y_train.sum();
  double left = 0.0;
  double best_gain = -1.0;
  double threshold = x_train[order[0]];
  double mean_left = total / n, mean_right = total / n;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    left += y_train[order[k]];
    const double xa = x_train[order[k]];
    const double xb = x_train[order[k + 1]];
    if (xa == xb) continue;
    const double nl = static_cast<double>(k + 1);
    const double nr = static_cast<double>(n - k - 1);
    const double right = total - left;
    const double gain = left * left / nl + right * right / nr;
    if (gain > best_gain) {
      best_gain = gain;
      threshold = 0.5 * (xa + xb);
      mean_left = left / nl;
      mean_right = right / nr;
    }
  }
  const double ybar = y_test.mean();
  double ss_res = 0.0, ss_tot = 0.0;
  for (Eigen::Index i = 0; i < x_test.size(); ++i) {
    const double pred = x_test[i] <= threshold ? mean_left : mean_right;
    ss_res += (y_test[i] - pred) * (y_test[i] - pred);
    ss_tot += (y_test[i] - ybar) * (y_test[i] - ybar);
  }
  if (ss_tot <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - ss_res / ss_tot);
}

// Softmax over classes with logits w_c * x + b_c, x standardized.
double logistic_accuracy(const Vector& x_train, const std::vector<int>& y_train,
                         const Vector& x_test, const std::vector<int>& y_test, int classes,
                         const SapOptions& options) {
  const double mu = x_train.mean();
  const double sd = std::sqrt((x_train.array() - mu).square().mean());
  const double scale = sd > 0.0 ? 1.0 / sd : 0.0;
  const Vector xs = (x_train.array() - mu) * scale;
  const Eigen::Index n = xs.size();
  Vector w = Vector::Zero(classes), b = Vector::Zero(classes);
  Vector p(classes);
  for (int step = 0; step < options.classifier_steps; ++step) {
    Vector gw = Vector::Zero(classes), gb = Vector::Zero(classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      p = w * xs[i] + b;
      p.array() -= p.maxCoeff();
      p = p.array().exp();
      p /= p.sum();
      p[y_train[i]] -= 1.0;
      gw += p * xs[i];
      gb += p;
    }
    w -= options.learning_rate / n * gw;
    b -= options.learning_rate / n * gb;
  }
  int correct = 0;
  for (Eigen::Index i = 0; i < x_test.size(); ++i) {
    Eigen::Index best = 0;
    (w * ((x_test[i] - mu) * scale) + b).maxCoeff(&best);
    if (best == y_test[i]) ++correct;
  }
  return x_test.size() > 0 ? static_cast<double>(correct) / x_test.size() : 0.0;
}

}  // namespace

SapReport sap(const MetricInput& input, const SapOptions& options) {
  input.validate();
  require(options.train_fraction > 0.0 && options.train_fraction < 1.0,
          "sap: train_fraction must lie in (0, 1)");
  const Eigen::Index n = input.latents.rows();
  const Eigen::Index n_train = static_cast<Eigen::Index>(std::floor(n * options.train_fraction));
  require(n_train >= 2 && n - n_train >= 1, "sap: too few samples for the split");
  const int dl = static_cast<int>(input.latents.cols());
  const int df = static_cast<int>(input.factors.cols());
  require(dl >= 2, "sap: needs at least 2 latents");

  SapReport report;
  report.scores = Matrix::Zero(dl, df);
  for (int j = 0; j < df; ++j) {
    const Vector f = input.factors.col(j);
    if (input.kind(j) == FactorKind::kCategorical) {
      std::map<long, int> index;
      for (Eigen::Index i = 0; i < n; ++i) index.emplace(std::lround(f[i]), 0);
      int k = 0;
      for (auto& [code, idx] : index) idx = k++;
      std::vector<int> labels(n);
      for (Eigen::Index i = 0; i < n; ++i) labels[i] = index.at(std::lround(f[i]));
      const std::vector<int> y_train(labels.begin(), labels.begin() + n_train);
      const std::vector<int> y_test(labels.begin() + n_train, labels.end());
      for (int i = 0; i < dl; ++i) {
        const Vector x = input.latents.col(i);
        report.scores(i, j) = logistic_accuracy(x.head(n_train), y_train, x.tail(n - n_train),
                                                y_test, k, options);
      }
    } else {
      for (int i = 0; i < dl; ++i) {
        const Vector x = input.latents.col(i);
        report.scores(i, j) =
            stump_r2(x.head(n_train), f.head(n_train), x.tail(n - n_train), f.tail(n - n_train));
      }
    }
  }
  double total = 0.0;
  for (int j = 0; j < df; ++j) {
    std::vector<double> col(report.scores.col(j).data(), report.scores.col(j).data() + dl);
    std::partial_sort(col.begin(), col.begin() + 2, col.end(), std::greater<>());
    total += col[0] - col[1];
  }
  report.score = total / df;
  return report;
}

}  // namespace slowlab::metrics
