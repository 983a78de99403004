#include "slowlab/dists.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace slowlab::dists {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be finite");
}

void require_sigma(double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be > 0");
}

double median_of(std::span<const double> data) {
  std::vector<double> v(data.begin(), data.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

bool is_constant(std::span<const double> data) {
  return std::all_of(data.begin(), data.end(), [&](double x) { return x == data[0]; });
}

void check_data(std::span<const double> data, std::size_t min_size) {
  if (data.size() < min_size)
    throw InvalidArgument("need at least " + std::to_string(min_size) + " samples");
  for (double x : data) require_finite(x, "data");
  if (is_constant(data)) throw InvalidArgument("data is constant");
}

// Profile log-likelihood with the rate at its closed-form optimum
//   rate^alpha = N / (alpha * sum |x - loc|^alpha).
double profile_loglik(std::span<const double> data, double alpha, double loc,
                      double* rate_out = nullptr) {
  const double n = static_cast<double>(data.size());
  double s = 0.0;
  for (double x : data) s += std::pow(std::abs(x - loc), alpha);
  if (!(s > 0)) return -std::numeric_limits<double>::infinity();
  const double rate = std::pow(n / (alpha * s), 1.0 / alpha);
  if (rate_out != nullptr) *rate_out = rate;
  return n * (std::log(alpha * rate) - std::numbers::ln2 - std::lgamma(1.0 / alpha)) - n / alpha;
}

struct SimplexProblem {
  std::function<double(const gsl_vector*)> f;
};

double simplex_trampoline(const gsl_vector* x, void* params) {
  return static_cast<SimplexProblem*>(params)->f(x);
}

// Minimizes over (log alpha, loc); returns {alpha, loc, value}.
std::array<double, 3> nelder_mead(const std::function<double(double, double)>& objective,
                                  double log_alpha0, double loc0, double loc_step) {
  SimplexProblem problem{[&](const gsl_vector* v) {
    const double la = gsl_vector_get(v, 0);
    if (la < std::log(0.02) || la > std::log(50.0)) return 1e300;
    const double val = objective(std::exp(la), gsl_vector_get(v, 1));
    return std::isfinite(val) ? val : 1e300;
  }};
  gsl_multimin_function fn{&simplex_trampoline, 2, &problem};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, log_alpha0);
  gsl_vector_set(x, 1, loc0);
  gsl_vector_set(step, 0, 0.3);
  gsl_vector_set(step, 1, loc_step);
  gsl_multimin_fminimizer* s =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  for (int iter = 0; iter < 2000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-7) == GSL_SUCCESS) break;
  }
  std::array<double, 3> out{std::exp(gsl_vector_get(s->x, 0)), gsl_vector_get(s->x, 1),
                            s->fval};
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return out;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kGenLaplace:
      return "gen-laplace";
    case Family::kGaussian:
      return "gaussian";
    case Family::kLaplace:
      return "laplace";
  }
  return "?";
}

void GenLaplaceParams::validate() const {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
  if (!(rate > 0) || !std::isfinite(rate)) throw InvalidArgument("rate must be > 0");
  require_finite(location, "location");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double genlap_logpdf(const GenLaplaceParams& params, double x) {
  params.validate();
  require_finite(x, "x");
  const double a = params.alpha;
  return std::log(a * params.rate / 2.0) - std::lgamma(1.0 / a) -
         std::pow(params.rate * std::abs(x - params.location), a);
}

double genlap_loglik(const GenLaplaceParams& params, std::span<const double> data) {
  params.validate();
  const double a = params.alpha;
  const double norm = std::log(a * params.rate / 2.0) - std::lgamma(1.0 / a);
  double total = 0.0;
  for (double x : data) total += norm - std::pow(params.rate * std::abs(x - params.location), a);
  return total;
}

double genlap_draw(const GenLaplaceParams& params, Rng& rng) {
  std::gamma_distribution<double> gamma(1.0 / params.alpha, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double magnitude = std::pow(gamma(rng), 1.0 / params.alpha) / params.rate;
  return params.location + (coin(rng) ? magnitude : -magnitude);
}

std::vector<double> genlap_sample(const GenLaplaceParams& params, std::size_t n, Rng& rng) {
  params.validate();
  require(n >= 1, "genlap_sample needs n >= 1");
  std::gamma_distribution<double> gamma(1.0 / params.alpha, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double magnitude = std::pow(gamma(rng), 1.0 / params.alpha) / params.rate;
    x = params.location + (coin(rng) ? magnitude : -magnitude);
  }
  return out;
}

FitReportEntry fit_gaussian(std::span<const double> data) {
  check_data(data, 2);
  const double n = static_cast<double>(data.size());
  const double mu = std::accumulate(data.begin(), data.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : data) ss += (x - mu) * (x - mu);
  const double sigma = std::sqrt(ss / n);
  const double loglik = -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) - 0.5 * n;
  return {Family::kGaussian, {mu, sigma}, loglik, 0.0};
}

FitReportEntry fit_laplace(std::span<const double> data) {
  check_data(data, 2);
  const double n = static_cast<double>(data.size());
  const double med = median_of(data);
  double sad = 0.0;
  for (double x : data) sad += std::abs(x - med);
  const double b = sad / n;
  const double loglik = -n * std::log(2.0 * b) - sad / b;
  return {Family::kLaplace, {med, b}, loglik, 0.0};
}

GenLaplaceFit genlap_fit_mle(std::span<const double> data) {
  check_data(data, 100);
  const double n = static_cast<double>(data.size());
  const double med = median_of(data);
  double mad = 0.0;
  for (double x : data) mad += std::abs(x - med);
  mad /= n;
  const double loc_step = mad > 0 ? 0.1 * mad : 1e-3;

  auto objective = [&](double alpha, double loc) {
    return -profile_loglik(data, alpha, loc) / n;
  };

  GenLaplaceFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  auto consider = [&](double alpha, double loc) {
    double rate = 0.0;
    const double ll = profile_loglik(data, alpha, loc, &rate);
    if (ll > best.loglik) best = {{alpha, rate, loc}, ll};
  };

  for (double alpha0 : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto [alpha, loc, value] = nelder_mead(objective, std::log(alpha0), med, loc_step);
    (void)value;
    consider(alpha, loc);
  }

  // The nested closed-form fits are members of the family; never return a
  // worse optimum than either of them.
  const FitReportEntry lap = fit_laplace(data);
  const FitReportEntry gau = fit_gaussian(data);
  if (lap.loglik > best.loglik) best = {{1.0, 1.0 / lap.params[1], lap.params[0]}, lap.loglik};
  if (gau.loglik > best.loglik)
    best = {{2.0, 1.0 / (gau.params[1] * std::numbers::sqrt2), gau.params[0]}, gau.loglik};
  return best;
}

std::array<FitReportEntry, 3> fit_all_families(std::span<const double> data) {
  const GenLaplaceFit gl = genlap_fit_mle(data);
  const double k = kurtosis(data);
  FitReportEntry gen{Family::kGenLaplace,
                     {gl.params.alpha, gl.params.location, gl.params.scale()},
                     gl.loglik,
                     k};
  FitReportEntry gau = fit_gaussian(data);
  FitReportEntry lap = fit_laplace(data);
  gau.kurtosis = k;
  lap.kurtosis = k;
  return {gen, gau, lap};
}

double kurtosis(std::span<const double> data) {
  check_data(data, 4);
  const double n = static_cast<double>(data.size());
  const double mu = std::accumulate(data.begin(), data.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : data) {
    const double d2 = (x - mu) * (x - mu);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2);
}

double gaussian_kl_std(const GaussianMoments& m) {
  require_sigma(m.sigma);
  require_finite(m.mu, "mu");
  return -std::log(m.sigma) + 0.5 * (m.mu * m.mu + m.sigma * m.sigma - 1.0);
}

double gaussian_entropy(double sigma) {
  require_sigma(sigma);
  return std::log(sigma * std::sqrt(2.0 * std::numbers::pi * std::numbers::e));
}

double folded_normal_mean(const GaussianMoments& m) {
  require_sigma(m.sigma);
  require_finite(m.mu, "mu");
  const double u = m.mu / m.sigma;
  return m.sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * u * u) -
         m.mu * (1.0 - 2.0 * normal_cdf(u));
}

double laplace_cross_entropy(const GaussianMoments& post, double z_prev, double rate) {
  if (!(rate > 0) || !std::isfinite(rate)) throw InvalidArgument("rate must be > 0");
  require_finite(z_prev, "z_prev");
  return -std::log(rate / 2.0) + rate * folded_normal_mean({post.mu - z_prev, post.sigma});
}

PairKl slowvae_kl_pair(std::span<const GaussianMoments> post_prev,
                       std::span<const GaussianMoments> post_t, double rate) {
  if (post_prev.size() != post_t.size())
    throw InvalidArgument("posterior dimension mismatch");
  PairKl out;
  for (std::size_t i = 0; i < post_prev.size(); ++i) {
    out.marginal += gaussian_kl_std(post_prev[i]);
    out.transition += -gaussian_entropy(post_t[i].sigma) +
                      laplace_cross_entropy(post_t[i], post_prev[i].mu, rate);
  }
  return out;
}

}  // namespace slowlab::dists
