#include "slowlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slowlab::synth {

void SourceChainConfig::validate() const {
  require(dim >= 1, "dim must be >= 1");
  require(count >= 1, "count must be >= 1");
  require(alpha > 0 && std::isfinite(alpha), "alpha must be > 0");
  require(lambda > 0 && std::isfinite(lambda), "lambda must be > 0");
}

void PairBatch::validate() const {
  require(prev.rows() == next.rows() && prev.cols() == next.cols(),
          "pair batch prev/next shapes differ");
  require(prev.allFinite() && next.allFinite(), "pair batch has non-finite entries");
}

PairBatch PairBatch::rows(Eigen::Index start, Eigen::Index n) const {
  return {prev.middleRows(start, n), next.middleRows(start, n)};
}

PairBatch sample_pairs(const SourceChainConfig& config, Rng& rng) {
  config.validate();
  const dists::GenLaplaceParams innovation{config.alpha, config.lambda, 0.0};
  if (config.mode == ChainMode::kAr) {
    // count pairs need count + 1 consecutive states
    return sequence_pairs(sample_ar_sources(config.dim, config.count + 1, innovation, rng));
  }
  const auto n = static_cast<Eigen::Index>(config.count);
  PairBatch out{Matrix(n, config.dim), Matrix(n, config.dim)};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < config.dim; ++j) {
      out.prev(i, j) = normal(rng);
      out.next(i, j) = out.prev(i, j) + dists::genlap_draw(innovation, rng);
    }
  }
  return out;
}

Matrix sample_ar_sources(int dim, std::size_t length, const dists::GenLaplaceParams& innovation,
                         Rng& rng) {
  innovation.validate();
  require(dim >= 1, "dim must be >= 1");
  require(length >= 2, "AR length must be >= 2");
  RowVector state = RowVector::Zero(dim);
  auto advance = [&] {
    for (int j = 0; j < dim; ++j)
      state(j) = kArCoefficient * state(j) + dists::genlap_draw(innovation, rng);
  };
  for (int i = 0; i < kArBurnIn; ++i) advance();
  Matrix out(static_cast<Eigen::Index>(length), dim);
  out.row(0) = state;
  for (Eigen::Index t = 1; t < out.rows(); ++t) {
    advance();
    out.row(t) = state;
  }
  return out;
}

PairBatch sequence_pairs(const Matrix& sequence) {
  require(sequence.rows() >= 2, "sequence needs at least two rows");
  const Eigen::Index n = sequence.rows() - 1;
  return {sequence.topRows(n), sequence.bottomRows(n)};
}

double smooth_leaky_relu(double x, double slope) {
  const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  return slope * x + (1.0 - slope) * softplus;
}

double smooth_leaky_relu_derivative(double x, double slope) {
  return slope + (1.0 - slope) / (1.0 + std::exp(-x));
}

double smooth_leaky_relu_inverse(double y, double slope) {
  // The map is convex and increasing and f(y) >= y, so Newton from x = y
  // decreases monotonically to the root.
  double x = y;
  for (int i = 0; i < 200; ++i) {
    const double step = (smooth_leaky_relu(x, slope) - y) / smooth_leaky_relu_derivative(x, slope);
    x -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

int MixingStack::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int MixingStack::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

void MixingStack::validate() const {
  require(!layers.empty(), "mixing stack has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (i > 0) require(l.weight.cols() == layers[i - 1].weight.rows(), "layer shape mismatch");
    if (l.weight.rows() == l.weight.cols())
      require(std::abs(l.weight.determinant()) > 1e-8, "mixing layer is singular");
    else
      require(l.weight.rows() > l.weight.cols(), "mixing layers may only expand");
    if (l.slope) require(*l.slope > 0 && *l.slope <= 1, "slope must lie in (0, 1]");
  }
}

Matrix MixingStack::apply(const Matrix& z) const {
  require(z.cols() == input_dim(), "mixing input has the wrong dimension");
  Matrix h = z;
  for (const auto& l : layers) {
    h = h * l.weight.transpose();
    if (l.slope) {
      const double a = *l.slope;
      h = h.unaryExpr([a](double v) { return smooth_leaky_relu(v, a); });
    }
  }
  return h;
}

Matrix MixingStack::invert(const Matrix& x) const {
  require(x.cols() == output_dim(), "mixing output has the wrong dimension");
  Matrix h = x;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->slope) {
      const double a = *it->slope;
      h = h.unaryExpr([a](double v) { return smooth_leaky_relu_inverse(v, a); });
    }
    const Matrix& w = it->weight;
    if (w.rows() == w.cols())
      h = w.partialPivLu().solve(h.transpose()).transpose();
    else
      h = w.colPivHouseholderQr().solve(h.transpose()).transpose();
  }
  return h;
}

Matrix random_orthogonal(int dim, Rng& rng) {
  require(dim >= 1, "dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

MixingStack identity_stack(int dim) {
  require(dim >= 1, "dim must be >= 1");
  return {{{Matrix::Identity(dim, dim), std::nullopt}}};
}

MixingStack linear_stack(const Matrix& weight) {
  MixingStack s{{{weight, std::nullopt}}};
  s.validate();
  return s;
}

MixingStack diagonal_stack(const std::vector<double>& diag) {
  require(!diag.empty(), "diagonal must be non-empty");
  Vector d(static_cast<Eigen::Index>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) d(static_cast<Eigen::Index>(i)) = diag[i];
  return linear_stack(d.asDiagonal());
}

MixingStack make_mixing_stack(int dim, int layers, double slope, Rng& rng) {
  require(dim >= 1, "dim must be >= 1");
  require(layers >= 1, "need at least one mixing layer");
  require(slope > 0 && slope <= 1, "slope must lie in (0, 1]");
  MixingStack s;
  for (int l = 0; l < layers; ++l) s.layers.push_back({random_orthogonal(dim, rng), slope});
  s.layers.push_back({random_orthogonal(dim, rng), std::nullopt});
  return s;
}

MixingStack expanding_decoder(int dim_in, int dim_out, Rng& rng, double slope,
                              ExpandingFinal final_kind) {
  require(dim_in >= 1, "dim_in must be >= 1");
  require(dim_out >= dim_in, "expanding decoder needs dim_out >= dim_in");
  MixingStack s;
  s.layers.push_back({random_orthogonal(dim_in, rng), slope});
  Matrix final_layer;
  if (final_kind == ExpandingFinal::kOrthonormal) {
    final_layer = random_orthogonal(dim_out, rng).leftCols(dim_in);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim_in)));
    for (;;) {
      final_layer.resize(dim_out, dim_in);
      for (Eigen::Index i = 0; i < final_layer.size(); ++i) final_layer.data()[i] = normal(rng);
      Eigen::JacobiSVD<Matrix> svd(final_layer);
      if (svd.singularValues().minCoeff() > 1e-3) break;
    }
  }
  s.layers.push_back({final_layer, std::nullopt});
  return s;
}

PairBatch mix(const PairBatch& batch, const MixingStack& stack) {
  return {stack.apply(batch.prev), stack.apply(batch.next)};
}

void FactorGrid::validate() const {
  require(!sizes.empty(), "factor grid has no factors");
  for (int s : sizes) require(s >= 1, "factor sizes must be >= 1");
  require(circular.empty() || circular.size() == sizes.size(), "circular flags size mismatch");
}

std::vector<double> lap_conditional(int size, int first, double lambda, bool circular) {
  require(lambda > 0 && std::isfinite(lambda), "lambda must be > 0");
  require(first >= 0 && first < size, "first index out of range");
  std::vector<double> p(static_cast<std::size_t>(size));
  if (size == 1) {
    p[0] = 1.0;
    return p;
  }
  const double span = static_cast<double>(size - 1);
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    int d = std::abs(i - first);
    if (circular) d = std::min(d, size - d);
    p[i] = std::exp(-lambda * d / span);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

FactorPairBatch lap_transition_sample(const FactorGrid& grid, double lambda, bool reject_static,
                                      std::size_t count, Rng& rng) {
  grid.validate();
  require(lambda > 0 && std::isfinite(lambda), "lambda must be > 0");
  const int d = grid.num_factors();
  // One discrete distribution per (factor, first value).
  std::vector<std::vector<std::discrete_distribution<int>>> tables(d);
  bool can_move = false;
  for (int f = 0; f < d; ++f) {
    can_move = can_move || grid.sizes[f] > 1;
    for (int v = 0; v < grid.sizes[f]; ++v) {
      const auto p = lap_conditional(grid.sizes[f], v, lambda, grid.is_circular(f));
      tables[f].emplace_back(p.begin(), p.end());
    }
  }
  require(!reject_static || can_move, "cannot reject static pairs on a single-point grid");

  const auto n = static_cast<Eigen::Index>(count);
  FactorPairBatch out{IndexMatrix(n, d), IndexMatrix(n, d)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (;;) {
      bool changed = false;
      for (int f = 0; f < d; ++f) {
        std::uniform_int_distribution<int> first(0, grid.sizes[f] - 1);
        const int a = first(rng);
        const int b = tables[f][a](rng);
        out.prev(i, f) = a;
        out.next(i, f) = b;
        changed = changed || a != b;
      }
      if (changed || !reject_static) break;
    }
  }
  return out;
}

FactorPairBatch uni_transition_sample(const FactorGrid& grid, std::size_t count, Rng& rng) {
  grid.validate();
  const int d = grid.num_factors();
  require(d >= 2, "UNI transitions need at least two factors");
  for (int s : grid.sizes) require(s >= 2, "UNI transitions need every factor size >= 2");
  const auto n = static_cast<Eigen::Index>(count);
  FactorPairBatch out{IndexMatrix(n, d), IndexMatrix(n, d)};
  std::uniform_int_distribution<int> pick_k(1, d - 1);
  std::vector<int> order(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < d; ++f) {
      std::uniform_int_distribution<int> value(0, grid.sizes[f] - 1);
      out.prev(i, f) = value(rng);
      out.next(i, f) = out.prev(i, f);
    }
    const int k = pick_k(rng);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int c = 0; c < k; ++c) {
      const int f = order[c];
      // uniform over the size-1 values different from the current one
      std::uniform_int_distribution<int> other(0, grid.sizes[f] - 2);
      int v = other(rng);
      if (v >= out.prev(i, f)) ++v;
      out.next(i, f) = v;
    }
  }
  return out;
}

PairBatch shuffle_per_factor(const PairBatch& batch, Rng& rng) {
  batch.validate();
  PairBatch out{Matrix(batch.prev.rows(), batch.prev.cols()),
                Matrix(batch.next.rows(), batch.next.cols())};
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(batch.count()));
  for (Eigen::Index j = 0; j < batch.dim(); ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < batch.count(); ++i) {
      out.prev(i, j) = batch.prev(perm[i], j);
      out.next(i, j) = batch.next(perm[i], j);
    }
  }
  return out;
}

std::vector<int> changed_factor_counts(const FactorPairBatch& batch) {
  std::vector<int> out(static_cast<std::size_t>(batch.count()));
  for (Eigen::Index i = 0; i < batch.count(); ++i)
    out[i] = static_cast<int>((batch.prev.row(i).array() != batch.next.row(i).array()).count());
  return out;
}

}  // namespace slowlab::synth
