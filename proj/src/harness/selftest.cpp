#include "slowlab/harness/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "slowlab/dists.hpp"
#include "slowlab/estimators/training.hpp"

namespace slowlab::harness {
namespace {

struct Mc {
  double mean = 0.0;
  double se = 0.0;
};

Mc monte_carlo(std::size_t n, const std::function<double()>& draw) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = draw();
    s += v;
    s2 += v * v;
  }
  const double mean = s / static_cast<double>(n);
  const double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

double normal_logpdf(double x, double mu, double sigma) {
  const double u = (x - mu) / sigma;
  return -0.5 * u * u - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double laplace_logpdf(double x, double loc, double rate) {
  return std::log(rate / 2.0) - rate * std::abs(x - loc);
}

SuiteCheck mc_check(const std::string& term, int config, double value, const Mc& mc) {
  const double tol = 3.0 * mc.se;
  return {term, config, value, mc.mean, tol, std::abs(value - mc.mean) <= tol};
}

}  // namespace

std::size_t ClosedFormSuite::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.pass ? 0 : 1;
  return n;
}

ClosedFormSuite closed_form_suite(int configs, std::size_t samples, std::uint64_t seed) {
  require(configs > 0 && samples > 1, "closed_form_suite: need configurations and samples");
  const auto start = std::chrono::steady_clock::now();
  ClosedFormSuite suite;
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (int cfg = 0; cfg < configs; ++cfg) {
    Rng rng = child_rng(seed, static_cast<std::uint64_t>(cfg));
    std::normal_distribution<double> mean_dist(0.0, 1.0);
    std::uniform_real_distribution<double> sd_dist(0.1, 1.5);
    std::uniform_real_distribution<double> rate_dist(0.5, 8.0);
    const dists::GaussianMoments q{mean_dist(rng), sd_dist(rng)};
    const double z_prev = mean_dist(rng);
    const double rate = rate_dist(rng);
    std::normal_distribution<double> qd(q.mu, q.sigma);

    suite.checks.push_back(mc_check("gaussian_kl", cfg, dists::gaussian_kl_std(q), monte_carlo(samples, [&] {
                                      const double z = qd(rng);
                                      return normal_logpdf(z, q.mu, q.sigma) - normal_logpdf(z, 0.0, 1.0);
                                    })));
    suite.checks.push_back(mc_check("gaussian_entropy", cfg, dists::gaussian_entropy(q.sigma),
                                    monte_carlo(samples, [&] { return -normal_logpdf(qd(rng), q.mu, q.sigma); })));
    const double folded = dists::folded_normal_mean(q);
    suite.checks.push_back(
        mc_check("folded_normal_mean", cfg, folded, monte_carlo(samples, [&] { return std::abs(qd(rng)); })));
    auto density = [&](double x) { return std::abs(x) * std::exp(normal_logpdf(x, q.mu, q.sigma)); };
    const double lim = std::abs(q.mu) + 40.0 * q.sigma;
    const double quad = integrator.integrate(density, -lim, 0.0) + integrator.integrate(density, 0.0, lim);
    const double rel = std::abs(folded - quad) / quad;
    suite.checks.push_back({"folded_normal_quadrature", cfg, folded, quad, 1e-8, rel <= 1e-8});
    suite.checks.push_back(mc_check("laplace_cross_entropy", cfg, dists::laplace_cross_entropy(q, z_prev, rate),
                                    monte_carlo(samples, [&] { return -laplace_logpdf(qd(rng), z_prev, rate); })));

    const int d = 3;
    std::vector<dists::GaussianMoments> prev(d), cur(d);
    for (int i = 0; i < d; ++i) {
      prev[i] = {mean_dist(rng), sd_dist(rng)};
      cur[i] = {prev[i].mu + 0.3 * mean_dist(rng), sd_dist(rng)};
    }
    const dists::PairKl kl = dists::slowvae_kl_pair(prev, cur, rate);
    std::normal_distribution<double> eps;
    suite.checks.push_back(mc_check("pair_kl", cfg, kl.marginal + kl.transition, monte_carlo(samples / d, [&] {
                                      double v = 0.0;
                                      for (int i = 0; i < d; ++i) {
                                        const double z0 = prev[i].mu + prev[i].sigma * eps(rng);
                                        const double z1 = cur[i].mu + cur[i].sigma * eps(rng);
                                        v += normal_logpdf(z0, prev[i].mu, prev[i].sigma) - normal_logpdf(z0, 0.0, 1.0);
                                        v += normal_logpdf(z1, cur[i].mu, cur[i].sigma) -
                                             laplace_logpdf(z1, prev[i].mu, rate);
                                      }
                                      return v;
                                    })));
  }
  suite.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return suite;
}

std::vector<GradientCheck> gradient_suite(std::uint64_t seed, double tolerance) {
  Rng rng = child_rng(seed, 0);
  synth::SourceChainConfig sc;
  sc.dim = 4;
  sc.count = 4000;
  const synth::PairBatch z = synth::sample_pairs(sc, rng);
  const synth::PairBatch x = synth::mix(z, synth::make_mixing_stack(4, 1, 0.5, rng));
  const synth::PairBatch small = x.rows(0, 16);
  est::TrainConfig tc;
  tc.steps = 100;
  tc.batch_size = 64;
  tc.adam.lr = 3e-3;
  const Matrix e0 = est::normal_matrix(16, 4, 1.0, rng), e1 = est::normal_matrix(16, 4, 1.0, rng);

  std::vector<GradientCheck> out;
  auto check = [&](const std::string& name, grad::ParamStore& store, const grad::LossBuilder& loss,
                   const std::function<void()>& train) {
    for (const char* stage : {"init", "trained"}) {
      if (std::string(stage) == "trained") train();
      const grad::GradCheckResult r = grad::grad_check(loss, store);
      out.push_back({name, stage, r, r.checked > 0 && r.max_rel_error <= tolerance});
    }
  };

  est::FlowModel linear(est::FlowConfig{est::FlowKind::kLinear, 4}, rng);
  check("slowflow-linear", linear.params(), [&](grad::Tape& t) { return est::slowflow_nll(t, linear, small, 6.0); },
        [&] { est::train_slowflow(linear, x, 6.0, tc, rng); });
  est::FlowModel coupling(est::FlowConfig{est::FlowKind::kCoupling, 4, 2, 8, est::Activation::kRelu, true}, rng);
  check("slowflow-coupling", coupling.params(),
        [&](grad::Tape& t) { return est::slowflow_nll(t, coupling, small, 6.0); },
        [&] { est::train_slowflow(coupling, x, 6.0, tc, rng); });
  est::VaeConfig vc;
  vc.x_dim = 4;
  vc.latent_dim = 4;
  vc.hidden = 8;
  for (bool pm : {false, true}) {
    est::VaeModel vae(vc, rng);
    const est::VaeObjective obj{10.0, pm ? 1.0 : 6.0, true,
                                pm ? est::TransitionPrior::kPosteriorMatching : est::TransitionPrior::kLaplace};
    check(pm ? "pmvae" : "slowvae", vae.params(),
          [&](grad::Tape& t) { return est::vae_loss(t, vae, small, obj, e0, e1).total; },
          [&] { est::train_vae(vae, x, obj, tc, rng); });
  }
  est::PclModel pcl(est::PclConfig{4, est::NetKind::kMlp, 8, 1, est::Activation::kRelu}, rng);
  // The zero-initialized head would make every encoder gradient vanish.
  for (const char* name : {"head.w", "head.a", "head.b"})
    pcl.params().get(name).value = est::normal_matrix(1, 4, 0.3, rng);
  const std::vector<int> perm = est::derangement(16, rng);
  check("pcl", pcl.params(), [&](grad::Tape& t) { return est::pcl_loss(t, pcl, small, perm); },
        [&] { est::train_pcl(pcl, x, tc, rng); });
  return out;
}

}  // namespace slowlab::harness
