#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "slowlab/dists.hpp"
#include "slowlab/synthgen.hpp"

using namespace slowlab;
using namespace slowlab::synth;

namespace {

Matrix gaussian_points(int n, int d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = normal(rng);
  return z;
}

double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace

TEST_CASE("pair transitions follow the Laplace rate") {
  Rng rng(1);
  SourceChainConfig cfg;
  cfg.dim = 2;
  cfg.alpha = 1.0;
  cfg.lambda = 6.0;
  cfg.count = 1000000;
  const PairBatch b = sample_pairs(cfg, rng);
  const Matrix delta = b.next - b.prev;
  for (int j = 0; j < 2; ++j) CHECK(delta.col(j).cwiseAbs().mean() == doctest::Approx(1.0 / 6.0).epsilon(0.01));
  CHECK(b.prev.col(0).array().square().mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pair sampling is deterministic and validates its config") {
  SourceChainConfig cfg;
  cfg.count = 1;
  Rng a(5), b(5);
  const PairBatch x = sample_pairs(cfg, a), y = sample_pairs(cfg, b);
  CHECK(x.prev == y.prev);
  CHECK(x.next == y.next);
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(sample_pairs(cfg, a), InvalidArgument);
}

TEST_CASE("very slow transitions barely move") {
  Rng rng(2);
  SourceChainConfig cfg;
  cfg.dim = 3;
  cfg.lambda = 1e4;
  cfg.count = 10000;
  const PairBatch b = sample_pairs(cfg, rng);
  int small = 0;
  for (Eigen::Index i = 0; i < b.count(); ++i)
    small += (b.next.row(i) - b.prev.row(i)).cwiseAbs().maxCoeff() < 0.01;
  CHECK(small >= 9900);
}

TEST_CASE("AR sources have lag-1 autocorrelation 0.7 and Laplace innovations") {
  Rng rng(3);
  const Matrix s = sample_ar_sources(1, 1000000, {1.0, 1.0, 0.0}, rng);
  const Vector a = s.col(0).head(s.rows() - 1);
  const Vector b = s.col(0).tail(s.rows() - 1);
  CHECK(std::abs(correlation(a, b) - 0.7) <= 0.01);
  const Vector innov = b - kArCoefficient * a;
  std::vector<double> v(innov.data(), innov.data() + innov.size());
  CHECK(std::abs(dists::kurtosis(v) - 6.0) <= 0.3);
  CHECK_THROWS_AS(sample_ar_sources(2, 1, {1.0, 1.0, 0.0}, rng), InvalidArgument);
}

TEST_CASE("sequence_pairs pairs adjacent rows") {
  Matrix seq(4, 2);
  seq << 1, 2, 3, 4, 5, 6, 7, 8;
  const PairBatch b = sequence_pairs(seq);
  CHECK(b.count() == 3);
  CHECK(b.prev.row(1) == seq.row(1));
  CHECK(b.next.row(1) == seq.row(2));
}

TEST_CASE("smooth leaky ReLU values, slopes and inverse") {
  CHECK(smooth_leaky_relu(0.0, 0.2) == doctest::Approx(0.8 * std::log(2.0)).epsilon(1e-14));
  CHECK(smooth_leaky_relu(-60.0, 0.2) == doctest::Approx(-12.0).epsilon(1e-12));
  for (double x = -30.0; x <= 30.0; x += 0.37) {
    const double d = smooth_leaky_relu_derivative(x, 0.2);
    CHECK(d >= 0.2);
    CHECK(d <= 1.0);
    const double y = smooth_leaky_relu(x, 0.2);
    CHECK(std::abs(smooth_leaky_relu_inverse(y, 0.2) - x) <= 1e-10 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("slope-one mixing stack is linear") {
  Rng rng(4);
  const MixingStack stack = make_mixing_stack(3, 1, 1.0, rng);
  const Matrix z = gaussian_points(20, 3, rng);
  const Matrix f0 = stack.apply(Matrix::Zero(1, 3));
  const Matrix fz = stack.apply(z);
  Matrix combo = 0.3 * z.topRows(10) - 1.7 * z.bottomRows(10);
  const Matrix lhs = stack.apply(combo).rowwise() - f0.row(0);
  const Matrix rhs = 0.3 * (fz.topRows(10).rowwise() - f0.row(0)) - 1.7 * (fz.bottomRows(10).rowwise() - f0.row(0));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mixing stacks round-trip through their inverse") {
  Rng rng(5);
  for (int layers = 1; layers <= 5; ++layers) {
    const MixingStack stack = make_mixing_stack(4, layers, 0.2, rng);
    const Matrix z = gaussian_points(1000, 4, rng);
    const Matrix back = stack.invert(stack.apply(z));
    const double err = (back - z).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-6);
    if (layers == 1) CHECK(err <= 1e-8);
  }
  CHECK_THROWS_AS(make_mixing_stack(0, 1, 0.2, rng), InvalidArgument);
  CHECK_THROWS_AS(make_mixing_stack(3, 0, 0.2, rng), InvalidArgument);
}

TEST_CASE("mixing stacks are seed-deterministic") {
  Rng a(6), b(6);
  const MixingStack x = make_mixing_stack(5, 3, 0.2, a);
  const MixingStack y = make_mixing_stack(5, 3, 0.2, b);
  REQUIRE(x.layers.size() == y.layers.size());
  for (std::size_t i = 0; i < x.layers.size(); ++i) CHECK(x.layers[i].weight == y.layers[i].weight);
}

TEST_CASE("mix applies the same map to both slices") {
  Rng rng(7);
  PairBatch b{gaussian_points(50, 2, rng), gaussian_points(50, 2, rng)};
  const PairBatch same = mix(b, identity_stack(2));
  CHECK(same.prev == b.prev);
  CHECK(same.next == b.next);
  const PairBatch squashed = mix(b, diagonal_stack({1.0, 0.2}));
  CHECK(squashed.prev.col(0) == b.prev.col(0));
  CHECK((squashed.next.col(1) - 0.2 * b.next.col(1)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("expanding decoder is well conditioned and injective") {
  Rng rng(8);
  for (int out : {5, 20, 50, 200}) {
    const MixingStack dec = expanding_decoder(5, out, rng);
    CHECK(dec.input_dim() == 5);
    CHECK(dec.output_dim() == out);
    const Eigen::JacobiSVD<Matrix> svd(dec.layers.back().weight);
    CHECK(svd.singularValues().minCoeff() > 1e-3);
    const Matrix z = gaussian_points(100, 5, rng);
    CHECK((dec.invert(dec.apply(z)) - z).cwiseAbs().maxCoeff() <= 1e-6);
  }
  const MixingStack square = expanding_decoder(4, 4, rng, 0.2, ExpandingFinal::kOrthonormal);
  const Matrix w = square.layers.back().weight;
  CHECK((w.transpose() * w - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(expanding_decoder(5, 4, rng), InvalidArgument);
  Rng a(9), b(9);
  CHECK(expanding_decoder(3, 30, a).layers.back().weight == expanding_decoder(3, 30, b).layers.back().weight);
}

TEST_CASE("LAP conditional is the renormalized exponential") {
  const auto p = lap_conditional(5, 1, 2.0, false);
  std::vector<double> expect(5);
  double z = 0.0;
  for (int i = 0; i < 5; ++i) z += expect[i] = std::exp(-2.0 * std::abs(i - 1) / 4.0);
  for (int i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(expect[i] / z).epsilon(1e-14));
  const auto c = lap_conditional(8, 0, 3.0, true);
  CHECK(c[1] == doctest::Approx(c[7]).epsilon(1e-14));
}

TEST_CASE("LAP sampler matches the analytic transition law") {
  Rng rng(10);
  const int size = 32;
  const FactorPairBatch b = lap_transition_sample(FactorGrid{{size}, {}}, 1.0, false, 1000000, rng);
  CHECK(b.prev.minCoeff() >= 0);
  CHECK(b.next.minCoeff() >= 0);
  CHECK(b.prev.maxCoeff() < size);
  CHECK(b.next.maxCoeff() < size);
  // Exact law of the index change, averaged over the uniform first index.
  std::vector<double> target(2 * size - 1, 0.0), empirical(2 * size - 1, 0.0);
  for (int first = 0; first < size; ++first) {
    const auto cond = lap_conditional(size, first, 1.0, false);
    for (int second = 0; second < size; ++second) target[second - first + size - 1] += cond[second] / size;
  }
  for (Eigen::Index i = 0; i < b.count(); ++i) empirical[b.next(i, 0) - b.prev(i, 0) + size - 1] += 1.0 / b.count();
  double tv = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) tv += 0.5 * std::abs(target[k] - empirical[k]);
  CHECK(tv <= 0.01);
}

TEST_CASE("LAP sampler on a dSprites-like grid") {
  Rng rng(11);
  const FactorGrid grid{{3, 6, 40, 32, 32}, {}};
  const FactorPairBatch b = lap_transition_sample(grid, 1.0, true, 20000, rng);
  const auto changed = changed_factor_counts(b);
  const double multi = std::count_if(changed.begin(), changed.end(), [](int c) { return c >= 2; }) /
                       static_cast<double>(changed.size());
  CHECK(multi > 0.5);
  CHECK(std::count(changed.begin(), changed.end(), 0) == 0);
  for (int f = 0; f < grid.num_factors(); ++f) {
    CHECK(b.next.col(f).minCoeff() >= 0);
    CHECK(b.next.col(f).maxCoeff() < grid.sizes[f]);
  }
  const FactorPairBatch frozen = lap_transition_sample(grid, 1e4, false, 10000, rng);
  const auto still = changed_factor_counts(frozen);
  CHECK(std::count(still.begin(), still.end(), 0) >= 9900);
  CHECK_THROWS_AS(lap_transition_sample(grid, 0.0, false, 10, rng), InvalidArgument);
}

TEST_CASE("UNI sampler changes k ~ U{1..D-1} factors") {
  Rng rng(12);
  const FactorPairBatch two = uni_transition_sample(FactorGrid{{4, 5}, {}}, 1000, rng);
  for (int c : changed_factor_counts(two)) CHECK(c == 1);

  const FactorGrid grid{{3, 6, 10, 8, 8}, {}};
  const FactorPairBatch b = uni_transition_sample(grid, 1000000, rng);
  std::map<int, double> freq;
  for (int c : changed_factor_counts(b)) freq[c] += 1.0 / b.count();
  CHECK(freq.size() == 4);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(freq[k] - 0.25) <= 0.01);
  // Every changed factor differs; unchanged ones are equal by construction of the count.
  const auto counts = changed_factor_counts(b);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    int diff = 0;
    for (int f = 0; f < 5; ++f) diff += b.prev(i, f) != b.next(i, f);
    CHECK(diff == counts[i]);
  }
}

TEST_CASE("per-factor shuffling keeps marginals and removes cross-factor dependence") {
  Rng rng(13);
  const int n = 100000;
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> scale_dist(1.0);
  PairBatch b;
  b.prev = gaussian_points(n, 2, rng);
  b.next = b.prev;
  for (int i = 0; i < n; ++i) {
    const double s = scale_dist(rng);
    for (int j = 0; j < 2; ++j) b.next(i, j) += s * normal(rng);
  }
  const Matrix abs_delta = (b.next - b.prev).cwiseAbs();
  CHECK(correlation(abs_delta.col(0), abs_delta.col(1)) > 0.2);

  const PairBatch s = shuffle_per_factor(b, rng);
  const Matrix shuffled_delta = (s.next - s.prev).cwiseAbs();
  CHECK(std::abs(correlation(shuffled_delta.col(0), shuffled_delta.col(1))) <= 0.01);
  for (int j = 0; j < 2; ++j) {
    std::vector<std::pair<double, double>> before, after;
    for (int i = 0; i < n; ++i) {
      before.emplace_back(b.prev(i, j), b.next(i, j));
      after.emplace_back(s.prev(i, j), s.next(i, j));
    }
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    CHECK(before == after);
  }
}

TEST_CASE("single-factor shuffling is a row permutation") {
  Rng rng(14);
  PairBatch b{gaussian_points(200, 1, rng), gaussian_points(200, 1, rng)};
  const PairBatch s = shuffle_per_factor(b, rng);
  std::vector<std::pair<double, double>> x, y;
  for (int i = 0; i < 200; ++i) {
    x.emplace_back(b.prev(i, 0), b.next(i, 0));
    y.emplace_back(s.prev(i, 0), s.next(i, 0));
  }
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  CHECK(x == y);
}
