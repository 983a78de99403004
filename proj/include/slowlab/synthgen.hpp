#ifndef SLOWLAB_SYNTHGEN_HPP_
#define SLOWLAB_SYNTHGEN_HPP_

#include <optional>
#include <string>
#include <vector>

#include "slowlab/common.hpp"
#include "slowlab/dists.hpp"

namespace slowlab::synth {

enum class ChainMode { kPair, kAr };

inline constexpr double kArCoefficient = 0.7;
inline constexpr int kArBurnIn = 100;

struct SourceChainConfig {
  int dim = 2;
  double alpha = 1.0;
  double lambda = 6.0;
  ChainMode mode = ChainMode::kPair;
  std::size_t count = 1000;

  void validate() const;
};

// Temporally adjacent rows: prev.row(i) -> next.row(i).
struct PairBatch {
  Matrix prev;
  Matrix next;

  Eigen::Index count() const { return prev.rows(); }
  Eigen::Index dim() const { return prev.cols(); }
  void validate() const;
  PairBatch rows(Eigen::Index start, Eigen::Index n) const;
};

struct FactorPairBatch {
  IndexMatrix prev;
  IndexMatrix next;

  Eigen::Index count() const { return prev.rows(); }
  Eigen::Index num_factors() const { return prev.cols(); }
};

// z_prev ~ N(0, I), z_next = z_prev + eps, eps_i ~ GenLaplace(alpha, lambda, 0).
PairBatch sample_pairs(const SourceChainConfig& config, Rng& rng);

// s(t) = 0.7 s(t-1) + eps(t) after a 100-step burn-in from zero.
Matrix sample_ar_sources(int dim, std::size_t length,
                         const dists::GenLaplaceParams& innovation, Rng& rng);

// Consecutive rows of a sequence as a pair batch.
PairBatch sequence_pairs(const Matrix& sequence);

// a*x + (1-a)*log(1+e^x); strictly increasing for a in (0, 1].
double smooth_leaky_relu(double x, double slope);
double smooth_leaky_relu_derivative(double x, double slope);
// Newton iteration; accurate to ~1e-14 relative.
double smooth_leaky_relu_inverse(double y, double slope);

struct MixingLayer {
  Matrix weight;                  // out_dim x in_dim, applied as W * z
  std::optional<double> slope;    // smooth leaky ReLU after the matrix
};

// x = layer_L( ... layer_1(z)). Rows of the input matrices are samples.
struct MixingStack {
  std::vector<MixingLayer> layers;

  int input_dim() const;
  int output_dim() const;
  void validate() const;
  Matrix apply(const Matrix& z) const;
  // Inverts a stack of square layers; rectangular layers are inverted by
  // least squares, exact on the range of the stack.
  Matrix invert(const Matrix& x) const;
};

Matrix random_orthogonal(int dim, Rng& rng);

MixingStack identity_stack(int dim);
MixingStack linear_stack(const Matrix& weight);
// diag(1, kappa) generalised to any diagonal.
MixingStack diagonal_stack(const std::vector<double>& diag);

// L blocks of (random orthogonal, smooth leaky ReLU) followed by a final
// orthogonal linear layer.
MixingStack make_mixing_stack(int dim, int layers, double slope, Rng& rng);

enum class ExpandingFinal { kGaussian, kOrthonormal };

// Orthogonal square layer + smooth leaky ReLU, then a dim_out x dim_in
// full-column-rank map (Gaussian entries with variance 1/dim_in, resampled
// until every singular value exceeds 1e-3; or orthonormal columns).
MixingStack expanding_decoder(int dim_in, int dim_out, Rng& rng, double slope = 0.2,
                              ExpandingFinal final_kind = ExpandingFinal::kGaussian);

PairBatch mix(const PairBatch& batch, const MixingStack& stack);

struct FactorGrid {
  std::vector<int> sizes;
  std::vector<bool> circular;  // empty means all false

  int num_factors() const { return static_cast<int>(sizes.size()); }
  bool is_circular(int f) const { return !circular.empty() && circular[f]; }
  void validate() const;
};

// Probability of moving from index `first` to each index of a factor with
// `size` values; indices are normalized to [0, 1].
std::vector<double> lap_conditional(int size, int first, double lambda, bool circular);

FactorPairBatch lap_transition_sample(const FactorGrid& grid, double lambda,
                                      bool reject_static, std::size_t count, Rng& rng);

// Exactly k ~ U{1..D-1} factors change, each to a uniformly drawn different value.
FactorPairBatch uni_transition_sample(const FactorGrid& grid, std::size_t count, Rng& rng);

// Independently permutes the example order of every factor's (prev, next)
// column pair.
PairBatch shuffle_per_factor(const PairBatch& batch, Rng& rng);

std::vector<int> changed_factor_counts(const FactorPairBatch& batch);

}  // namespace slowlab::synth

#endif  // SLOWLAB_SYNTHGEN_HPP_
