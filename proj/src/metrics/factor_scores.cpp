#include "slowlab/metrics/factor_scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slowlab::metrics {

GridFactorSampler::GridFactorSampler(synth::FactorGrid grid) : grid_(std::move(grid)) {
  grid_.validate();
}

Matrix GridFactorSampler::sample(std::size_t n, Rng& rng) const {
  Matrix out(n, grid_.num_factors());
  for (int f = 0; f < grid_.num_factors(); ++f) {
    std::uniform_int_distribution<int> pick(0, grid_.sizes[f] - 1);
    for (std::size_t i = 0; i < n; ++i) out(i, f) = pick(rng);
  }
  return out;
}

Matrix GridFactorSampler::sample_fixed(std::size_t n, int factor, Rng& rng) const {
  require(factor >= 0 && factor < grid_.num_factors(), "sample_fixed: factor out of range");
  Matrix out = sample(n, rng);
  std::uniform_int_distribution<int> pick(0, grid_.sizes[factor] - 1);
  out.col(factor).setConstant(pick(rng));
  return out;
}

GaussianFactorSampler::GaussianFactorSampler(int dim) : dim_(dim) {
  require(dim >= 1, "GaussianFactorSampler: dim must be >= 1");
}

Matrix GaussianFactorSampler::sample(std::size_t n, Rng& rng) const {
  std::normal_distribution<double> normal;
  Matrix out(n, dim_);
  for (int f = 0; f < dim_; ++f)
    for (std::size_t i = 0; i < n; ++i) out(i, f) = normal(rng);
  return out;
}

Matrix GaussianFactorSampler::sample_fixed(std::size_t n, int factor, Rng& rng) const {
  require(factor >= 0 && factor < dim_, "sample_fixed: factor out of range");
  Matrix out = sample(n, rng);
  std::normal_distribution<double> normal;
  out.col(factor).setConstant(normal(rng));
  return out;
}

namespace {

RowVector sample_variance(const Matrix& z) {
  const RowVector mean = z.colwise().mean();
  return (z.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(z.rows() - 1);
}

}  // namespace

FactorVaeReport factorvae_score(const FactorSampler& sampler, const Encoder& encoder,
                                const FactorVaeOptions& options, Rng& rng) {
  require(options.big_batch >= 2 && options.small_batch >= 2, "factorvae: batches must hold >= 2 rows");
  require(options.train_votes >= 1 && options.eval_votes >= 1, "factorvae: need votes");
  const int df = sampler.num_factors();
  const Matrix big = encoder(sampler.sample(options.big_batch, rng));
  require(big.rows() == static_cast<Eigen::Index>(options.big_batch), "factorvae: encoder changed the row count");
  const RowVector global = sample_variance(big);
  std::vector<int> active;
  for (Eigen::Index i = 0; i < global.size(); ++i)
    if (global[i] >= options.variance_threshold) active.push_back(static_cast<int>(i));
  if (active.empty()) throw InvalidArgument("factorvae: every latent was pruned by the variance threshold");
  const int dl = static_cast<int>(global.size());

  std::uniform_int_distribution<int> pick_factor(0, df - 1);
  auto vote = [&](int& latent, int& factor) {
    factor = pick_factor(rng);
    const RowVector local = sample_variance(encoder(sampler.sample_fixed(options.small_batch, factor, rng)));
    double best = std::numeric_limits<double>::infinity();
    for (int i : active) {
      const double ratio = local[i] / global[i];
      if (ratio < best) {
        best = ratio;
        latent = i;
      }
    }
  };

  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(dl, df);
  for (std::size_t v = 0; v < options.train_votes; ++v) {
    int latent = 0, factor = 0;
    vote(latent, factor);
    ++counts(latent, factor);
  }
  std::vector<int> classifier(dl, 0);
  long majority = 0;
  for (int i = 0; i < dl; ++i) {
    Eigen::Index best = 0;
    majority += counts.row(i).maxCoeff(&best);
    classifier[i] = static_cast<int>(best);
  }
  FactorVaeReport report;
  report.active_dims = static_cast<int>(active.size());
  report.train_accuracy = static_cast<double>(majority) / options.train_votes;
  long correct = 0;
  for (std::size_t v = 0; v < options.eval_votes; ++v) {
    int latent = 0, factor = 0;
    vote(latent, factor);
    if (classifier[latent] == factor) ++correct;
  }
  report.score = static_cast<double>(correct) / options.eval_votes;
  return report;
}

std::vector<int> SoftmaxClassifier::predict(const Matrix& x) const {
  const Matrix xs = ((x.rowwise() - feature_mean).array().rowwise() * feature_scale.array()).matrix();
  const Matrix logits = (xs * weights).rowwise() + bias;
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

SoftmaxClassifier train_softmax(const Matrix& x, const std::vector<int>& labels, int classes,
                                int steps, double learning_rate, double l2) {
  const Eigen::Index n = x.rows();
  require(n >= 1 && static_cast<std::size_t>(n) == labels.size(), "train_softmax: label count mismatch");
  require(classes >= 2, "train_softmax: need at least 2 classes");
  SoftmaxClassifier clf;
  clf.feature_mean = x.colwise().mean();
  const RowVector sd = ((x.rowwise() - clf.feature_mean).array().square().colwise().mean()).sqrt();
  clf.feature_scale = sd.unaryExpr([](double s) { return s > 0.0 ? 1.0 / s : 0.0; });
  const Matrix xs = ((x.rowwise() - clf.feature_mean).array().rowwise() * clf.feature_scale.array()).matrix();
  Matrix onehot = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "train_softmax: label out of range");
    onehot(i, labels[i]) = 1.0;
  }
  clf.weights = Matrix::Zero(x.cols(), classes);
  clf.bias = RowVector::Zero(classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int step = 0; step < steps; ++step) {
    Matrix p = (xs * clf.weights).rowwise() + clf.bias;
    p = (p.colwise() - p.rowwise().maxCoeff()).array().exp().matrix();
    p = p.array().colwise() / p.rowwise().sum().array();
    p -= onehot;
    const Matrix gw = inv_n * (xs.transpose() * p) + (l2 * inv_n) * clf.weights;
    const RowVector gb = inv_n * p.colwise().sum();
    clf.weights -= learning_rate * gw;
    clf.bias -= learning_rate * gb;
  }
  return clf;
}

namespace {

// One training point per row: the mean |z1 - z2| over pairs sharing a factor.
void betavae_points(const FactorSampler& sampler, const Encoder& encoder, std::size_t points,
                    std::size_t batch, Rng& rng, Matrix& features, std::vector<int>& labels) {
  const int df = sampler.num_factors();
  std::uniform_int_distribution<int> pick_factor(0, df - 1);
  constexpr std::size_t kChunk = 256;
  labels.assign(points, 0);
  for (std::size_t start = 0; start < points; start += kChunk) {
    const std::size_t count = std::min(kChunk, points - start);
    Matrix rows(2 * batch * count, df);
    for (std::size_t p = 0; p < count; ++p) {
      const int k = pick_factor(rng);
      labels[start + p] = k;
      for (std::size_t b = 0; b < batch; ++b)
        rows.middleRows(2 * (p * batch + b), 2) = sampler.sample_fixed(2, k, rng);
    }
    const Matrix z = encoder(rows);
    require(z.rows() == rows.rows(), "betavae: encoder changed the row count");
    if (features.size() == 0) features = Matrix::Zero(points, z.cols());
    for (std::size_t p = 0; p < count; ++p) {
      RowVector acc = RowVector::Zero(z.cols());
      for (std::size_t b = 0; b < batch; ++b) {
        const Eigen::Index r = 2 * (p * batch + b);
        acc += (z.row(r) - z.row(r + 1)).cwiseAbs();
      }
      features.row(start + p) = acc / static_cast<double>(batch);
    }
  }
}

}  // namespace

BetaVaeReport betavae_score(const FactorSampler& sampler, const Encoder& encoder,
                            const BetaVaeOptions& options, Rng& rng) {
  require(options.batch_size >= 1 && options.train_points >= 2 && options.eval_points >= 1,
          "betavae: invalid batch sizes");
  const int df = sampler.num_factors();
  require(df >= 2, "betavae: needs at least 2 factors");
  Matrix x_train, x_eval;
  std::vector<int> y_train, y_eval;
  betavae_points(sampler, encoder, options.train_points, options.batch_size, rng, x_train, y_train);
  betavae_points(sampler, encoder, options.eval_points, options.batch_size, rng, x_eval, y_eval);
  if (options.shuffle_labels) {
    std::shuffle(y_train.begin(), y_train.end(), rng);
    std::shuffle(y_eval.begin(), y_eval.end(), rng);
  }
  const SoftmaxClassifier clf =
      train_softmax(x_train, y_train, df, options.steps, options.learning_rate, options.l2);
  auto accuracy = [](const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / truth.size();
  };
  BetaVaeReport report;
  report.train_accuracy = accuracy(clf.predict(x_train), y_train);
  report.score = accuracy(clf.predict(x_eval), y_eval);
  return report;
}

}  // namespace slowlab::metrics
