#ifndef SLOWLAB_METRICS_FACTOR_SCORES_HPP_
#define SLOWLAB_METRICS_FACTOR_SCORES_HPP_

#include <functional>

#include "slowlab/common.hpp"
#include "slowlab/synthgen.hpp"

namespace slowlab::metrics {

// Draws ground-truth factor values, optionally with one factor held fixed.
class FactorSampler {
 public:
  virtual ~FactorSampler() = default;
  virtual int num_factors() const = 0;
  virtual Matrix sample(std::size_t n, Rng& rng) const = 0;
  // n rows that all share one (randomly drawn) value of `factor`.
  virtual Matrix sample_fixed(std::size_t n, int factor, Rng& rng) const = 0;
};

// Uniform over the index values of a factor grid.
class GridFactorSampler : public FactorSampler {
 public:
  explicit GridFactorSampler(synth::FactorGrid grid);
  int num_factors() const override { return grid_.num_factors(); }
  Matrix sample(std::size_t n, Rng& rng) const override;
  Matrix sample_fixed(std::size_t n, int factor, Rng& rng) const override;

 private:
  synth::FactorGrid grid_;
};

// Independent standard-normal factors, matching the pair prior marginal.
class GaussianFactorSampler : public FactorSampler {
 public:
  explicit GaussianFactorSampler(int dim);
  int num_factors() const override { return dim_; }
  Matrix sample(std::size_t n, Rng& rng) const override;
  Matrix sample_fixed(std::size_t n, int factor, Rng& rng) const override;

 private:
  int dim_;
};

// Maps factor values (rows) to representation means (rows).
using Encoder = std::function<Matrix(const Matrix& factors)>;

struct FactorVaeOptions {
  double variance_threshold = 0.05;
  std::size_t big_batch = 10000;
  std::size_t small_batch = 64;
  std::size_t train_votes = 800;
  std::size_t eval_votes = 800;
};

struct FactorVaeReport {
  double score = 0.0;       // held-out majority-vote accuracy
  double train_accuracy = 0.0;
  int active_dims = 0;
};

// Throws InvalidArgument when every latent falls below the variance threshold.
FactorVaeReport factorvae_score(const FactorSampler& sampler, const Encoder& encoder,
                                const FactorVaeOptions& options, Rng& rng);

struct BetaVaeOptions {
  std::size_t batch_size = 64;
  std::size_t train_points = 10000;
  std::size_t eval_points = 5000;
  int steps = 2000;
  double learning_rate = 0.5;
  double l2 = 1.0;             // penalty 0.5 * l2 * |W|^2 on the summed loss
  bool shuffle_labels = false;  // null control
};

struct BetaVaeReport {
  double score = 0.0;  // held-out accuracy
  double train_accuracy = 0.0;
};

BetaVaeReport betavae_score(const FactorSampler& sampler, const Encoder& encoder,
                            const BetaVaeOptions& options, Rng& rng);

// Multinomial logistic regression by full-batch gradient descent on
// standardized features. Returns predicted labels for `test`.
struct SoftmaxClassifier {
  Matrix weights;  // features x classes
  RowVector bias;
  RowVector feature_mean;
  RowVector feature_scale;

  std::vector<int> predict(const Matrix& x) const;
};

SoftmaxClassifier train_softmax(const Matrix& x, const std::vector<int>& labels, int classes,
                                int steps, double learning_rate, double l2);

}  // namespace slowlab::metrics

#endif  // SLOWLAB_METRICS_FACTOR_SCORES_HPP_
