#ifndef SLOWLAB_DISTS_HPP_
#define SLOWLAB_DISTS_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "slowlab/common.hpp"

namespace slowlab::dists {

// Generalized Laplace (generalized normal) family:
//   p(x) = alpha * rate / (2 Gamma(1/alpha)) * exp(-(rate * |x - location|)^alpha)
// alpha = 1 is Laplace with scale 1/rate, alpha = 2 is Gaussian with
// variance 1 / (2 rate^2).
struct GenLaplaceParams {
  double alpha = 1.0;
  double rate = 1.0;
  double location = 0.0;

  void validate() const;
  double scale() const { return 1.0 / rate; }
};

struct GaussianMoments {
  double mu = 0.0;
  double sigma = 1.0;
};

enum class Family { kGenLaplace, kGaussian, kLaplace };

std::string family_name(Family f);

// params layout mirrors the published tables:
//   gen-laplace: [alpha, location, scale]; gaussian / laplace: [location, scale]
struct FitReportEntry {
  Family family = Family::kGaussian;
  std::vector<double> params;
  double loglik = 0.0;
  double kurtosis = 0.0;
};

struct GenLaplaceFit {
  GenLaplaceParams params;
  double loglik = 0.0;
};

double normal_cdf(double x);

double genlap_logpdf(const GenLaplaceParams& params, double x);
double genlap_loglik(const GenLaplaceParams& params, std::span<const double> data);

// |X - loc| = G^(1/alpha) / rate with G ~ Gamma(1/alpha, 1), random sign.
std::vector<double> genlap_sample(const GenLaplaceParams& params, std::size_t n, Rng& rng);
double genlap_draw(const GenLaplaceParams& params, Rng& rng);

// Maximum likelihood over (alpha, rate, location). The rate is profiled out in
// closed form; (log alpha, location) are searched with a Nelder-Mead simplex
// started from alpha in {0.25, 0.5, 1, 2, 4} at the sample median. Needs at
// least 100 non-constant samples.
GenLaplaceFit genlap_fit_mle(std::span<const double> data);

// Closed-form Gaussian (mean, std) and Laplace (median, mean |x - median|) fits.
FitReportEntry fit_gaussian(std::span<const double> data);
FitReportEntry fit_laplace(std::span<const double> data);

// gen-laplace, gaussian, laplace, in that order.
std::array<FitReportEntry, 3> fit_all_families(std::span<const double> data);

// Pearson (non-excess) kurtosis m4 / m2^2.
double kurtosis(std::span<const double> data);

// KL(N(mu, sigma^2) || N(0, 1)).
double gaussian_kl_std(const GaussianMoments& m);
double gaussian_entropy(double sigma);
// E|X| for X ~ N(mu, sigma^2).
double folded_normal_mean(const GaussianMoments& m);
// H(N(mu_t, sigma_t^2), Laplace(z_prev, 1/rate)).
double laplace_cross_entropy(const GaussianMoments& post, double z_prev, double rate);

struct PairKl {
  double marginal = 0.0;
  double transition = 0.0;
};

// KL terms of the slow pair prior for factorized Gaussian posteriors; the
// Laplace conditional is centred at the previous posterior mean.
PairKl slowvae_kl_pair(std::span<const GaussianMoments> post_prev,
                       std::span<const GaussianMoments> post_t, double rate);

}  // namespace slowlab::dists

#endif  // SLOWLAB_DISTS_HPP_
