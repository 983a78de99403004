#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "slowlab/dists.hpp"
#include "slowlab/estimators/checkpoint.hpp"
#include "slowlab/estimators/training.hpp"
#include "slowlab/metrics/mcc.hpp"

using namespace slowlab;
using namespace slowlab::est;

namespace {

synth::PairBatch latent_pairs(int dim, double alpha, double lambda, std::size_t count, Rng& rng) {
  synth::SourceChainConfig cfg;
  cfg.dim = dim;
  cfg.alpha = alpha;
  cfg.lambda = lambda;
  cfg.count = count;
  return synth::sample_pairs(cfg, rng);
}

double mcc_score(const Matrix& latents, const Matrix& factors, Rng& rng,
                 metrics::Correlation c = metrics::Correlation::kSpearman) {
  metrics::MetricInput in{latents, factors, {}};
  return metrics::mcc(in, {c}, rng).score / 100.0;
}

synth::PairBatch head(const synth::PairBatch& b, Eigen::Index n) { return b.rows(0, n); }

}  // namespace

TEST_CASE("identity flow loss estimates the pair entropy") {
  Rng rng(1);
  const int d = 3;
  const double lambda = 6.0;
  const synth::PairBatch z = latent_pairs(d, 1.0, lambda, 200000, rng);
  FlowModel flow(FlowConfig{FlowKind::kLinear, d}, rng);
  flow.params().get("W").value = Matrix::Identity(d, d);
  const double loss = slowflow_nll_value(flow, z, lambda);
  // Per-pair values of -log p give the Monte-Carlo standard error.
  Vector per(z.count());
  for (Eigen::Index i = 0; i < z.count(); ++i) per[i] = pair_nll_latent(z.rows(i, 1), lambda);
  const double se = std::sqrt((per.array() - per.mean()).square().mean() / per.size());
  const double entropy = d * (0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + 1.0 + std::log(2.0 / lambda));
  CHECK(std::abs(loss - entropy) <= 3.0 * se);
  CHECK(loss == doctest::Approx(per.mean()).epsilon(1e-12));
}

TEST_CASE("orthogonal demixing of rotated data matches identity on the sources") {
  Rng rng(2);
  const synth::PairBatch z = latent_pairs(4, 1.0, 6.0, 1000, rng);
  const Matrix o = synth::random_orthogonal(4, rng);
  const synth::PairBatch x{z.prev * o, z.next * o};
  FlowModel flow(FlowConfig{FlowKind::kLinear, 4}, rng);
  flow.params().get("W").value = o.transpose();
  FlowModel ident(FlowConfig{FlowKind::kLinear, 4}, rng);
  ident.params().get("W").value = Matrix::Identity(4, 4);
  CHECK(std::abs(slowflow_nll_value(flow, x, 6.0) - slowflow_nll_value(ident, z, 6.0)) <= 1e-10);
}

TEST_CASE("linear flow rejects mismatched widths") {
  Rng rng(3);
  FlowModel flow(FlowConfig{FlowKind::kLinear, 3}, rng);
  const synth::PairBatch z = latent_pairs(2, 1.0, 6.0, 10, rng);
  CHECK_THROWS_AS(slowflow_nll_value(flow, z, 6.0), InvalidArgument);
}

TEST_CASE("linear flow weights start orthogonal") {
  Rng rng(4);
  FlowModel flow(FlowConfig{FlowKind::kLinear, 5}, rng);
  const Matrix& w = flow.params().get("W").value;
  CHECK((w.transpose() * w - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("coupling flow is invertible with unit Jacobian blocks") {
  Rng rng(5);
  FlowConfig cfg{FlowKind::kCoupling, 5, 4, 16, Activation::kRelu, false};
  FlowModel flow(cfg, rng);
  // Randomize the zero-initialized output layers so the blocks are not identity maps.
  for (auto& p : flow.params().params()) p.value = normal_matrix(p.value.rows(), p.value.cols(), 0.5, rng);
  const Matrix x = normal_matrix(50, 5, 1.0, rng);
  const Matrix z = flow.transform(x);
  CHECK((z - x).cwiseAbs().maxCoeff() > 1e-3);
  CHECK((flow.inverse(z) - x).cwiseAbs().maxCoeff() <= 1e-10);
  grad::Tape tape;
  CHECK(flow.log_det(tape).scalar() == 0.0);
  // Numerical Jacobian determinant at a point is 1.
  Matrix jac(5, 5);
  const double h = 1e-6;
  for (int j = 0; j < 5; ++j) {
    Matrix xp = x.topRows(1), xm = x.topRows(1);
    xp(0, j) += h;
    xm(0, j) -= h;
    jac.row(j) = (flow.transform(xp) - flow.transform(xm)) / (2.0 * h);
  }
  CHECK(std::abs(jac.determinant() - 1.0) <= 1e-6);

  cfg.linear_layers = true;
  FlowModel with_linear(cfg, rng);
  for (auto& p : with_linear.params().params()) p.value += normal_matrix(p.value.rows(), p.value.cols(), 0.1, rng);
  CHECK((with_linear.inverse(with_linear.transform(x)) - x).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("linear SlowFlow recovers orthogonally mixed Laplace-transition sources") {
  Rng rng(6);
  const synth::PairBatch z = latent_pairs(4, 1.0, 6.0, 100000, rng);
  const synth::PairBatch x = synth::mix(z, synth::linear_stack(synth::random_orthogonal(4, rng)));
  FlowModel flow(FlowConfig{FlowKind::kLinear, 4}, rng);
  TrainConfig tc;
  tc.steps = 3000;
  tc.adam.lr = 0.01;
  const TrainLog log = train_slowflow(flow, x, 6.0, tc, rng, 6);
  CHECK(log.records.back().step == 3000);
  CHECK(mcc_score(flow.transform(x.prev), z.prev, rng) >= 0.98);

}

TEST_CASE("SlowFlow held-out loss comes within 5% of the true generator's") {
  Rng rng(7);
  const Matrix o = synth::random_orthogonal(4, rng);
  const synth::MixingStack stack = synth::linear_stack(2.0 * o);
  const synth::PairBatch z_train = latent_pairs(4, 1.0, 6.0, 50000, rng);
  const synth::PairBatch z_test = latent_pairs(4, 1.0, 6.0, 20000, rng);
  const synth::PairBatch x_train = synth::mix(z_train, stack), x_test = synth::mix(z_test, stack);
  FlowModel oracle(FlowConfig{FlowKind::kLinear, 4}, rng);
  // mix applies x = z * W^T for a layer W, so the demixer in row form is W^-T.
  oracle.params().get("W").value = (2.0 * o).inverse().transpose();
  const double oracle_loss = slowflow_nll_value(oracle, x_test, 6.0);
  CHECK(oracle_loss == doctest::Approx(pair_nll_latent(z_test, 6.0) - 2.0 * std::log(1.0 / 16.0)).epsilon(1e-10));
  FlowModel flow(FlowConfig{FlowKind::kLinear, 4}, rng);
  TrainConfig tc;
  tc.steps = 4000;
  tc.adam.lr = 0.01;
  const double before = slowflow_nll_value(flow, x_test, 6.0);
  train_slowflow(flow, x_train, 6.0, tc, rng);
  const double after = slowflow_nll_value(flow, x_test, 6.0);
  CHECK(after < before);
  CHECK(std::abs(after - oracle_loss) <= 0.05 * std::abs(oracle_loss));
}

TEST_CASE("SlowFlow MCC is unchanged by permuting and sign-flipping the sources") {
  double max_gap = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng = child_rng(seed, 8);
    const synth::PairBatch z = latent_pairs(3, 1.0, 6.0, 20000, rng);
    const Matrix o = synth::random_orthogonal(3, rng);
    Matrix ps = Matrix::Zero(3, 3);
    ps(0, 2) = -1.0;
    ps(1, 0) = 1.0;
    ps(2, 1) = -1.0;
    const synth::PairBatch z2{z.prev * ps, z.next * ps};
    double scores[2];
    for (int v = 0; v < 2; ++v) {
      const synth::PairBatch& src = v == 0 ? z : z2;
      Rng train_rng = child_rng(seed, 100);
      FlowModel flow(FlowConfig{FlowKind::kLinear, 3}, train_rng);
      TrainConfig tc;
      tc.steps = 2000;
      tc.adam.lr = 0.01;
      const synth::PairBatch x{src.prev * o, src.next * o};
      train_slowflow(flow, x, 6.0, tc, train_rng);
      scores[v] = mcc_score(flow.transform(x.prev), src.prev, train_rng);
    }
    max_gap = std::max(max_gap, std::abs(scores[0] - scores[1]));
  }
  CHECK(max_gap <= 0.02);
}

TEST_CASE("SlowVAE loss matches closed forms for identity networks") {
  Rng rng(9);
  VaeConfig cfg;
  cfg.x_dim = 2;
  cfg.latent_dim = 2;
  cfg.encoder = NetKind::kLinear;
  cfg.decoder = NetKind::kLinear;
  cfg.obs_sigma = 0.1;
  VaeModel vae(cfg, rng);
  Matrix enc = Matrix::Zero(2, 4);
  enc.leftCols(2) = Matrix::Identity(2, 2);
  vae.params().get("enc.W0").value = enc;
  vae.params().get("enc.b0").value.setZero();
  vae.params().get("dec.W0").value = Matrix::Identity(2, 2);
  vae.params().get("dec.b0").value.setZero();
  const synth::PairBatch x = latent_pairs(2, 1.0, 1.0, 64, rng);
  const Matrix e0 = normal_matrix(64, 2, 1.0, rng), e1 = normal_matrix(64, 2, 1.0, rng);
  const double lambda = 1.0;
  for (bool bidir : {false, true}) {
    grad::Tape tape;
    const VaeLossTerms t = vae_loss(tape, vae, x, VaeObjective{1.0, lambda, bidir, TransitionPrior::kLaplace}, e0, e1);
    double rec = 0.0, marg = 0.0, trans = 0.0;
    for (int i = 0; i < 64; ++i) {
      rec += 0.5 / 0.01 * (e0.row(i).squaredNorm() + e1.row(i).squaredNorm()) + 2.0 * std::log(2.0 * std::numbers::pi * 0.01);
      std::vector<dists::GaussianMoments> q0, q1;
      for (int k = 0; k < 2; ++k) {
        q0.push_back({x.prev(i, k), 1.0});
        q1.push_back({x.next(i, k), 1.0});
      }
      const dists::PairKl fwd = dists::slowvae_kl_pair(q0, q1, lambda);
      if (bidir) {
        const dists::PairKl bwd = dists::slowvae_kl_pair(q1, q0, lambda);
        marg += 0.5 * (fwd.marginal + bwd.marginal);
        trans += 0.5 * (fwd.transition + bwd.transition);
      } else {
        marg += fwd.marginal;
        trans += fwd.transition;
      }
    }
    CHECK(t.reconstruction.scalar() == doctest::Approx(rec / 64).epsilon(1e-12));
    CHECK(t.kl_marginal.scalar() == doctest::Approx(marg / 64).epsilon(1e-12));
    CHECK(t.kl_transition.scalar() == doctest::Approx(trans / 64).epsilon(1e-12));
    CHECK(t.total.scalar() == doctest::Approx((rec + marg + trans) / 64).epsilon(1e-12));
  }
}

TEST_CASE("closed-form KL terms of a random VAE match Monte Carlo") {
  Rng rng(10);
  VaeConfig cfg;
  cfg.x_dim = 3;
  cfg.latent_dim = 2;
  cfg.hidden = 8;
  VaeModel vae(cfg, rng);
  for (auto& p : vae.params().params()) p.value += normal_matrix(p.value.rows(), p.value.cols(), 0.3, rng);
  const synth::PairBatch x = latent_pairs(3, 1.0, 2.0, 1, rng);
  const double lambda = 2.0;
  for (TransitionPrior prior : {TransitionPrior::kLaplace, TransitionPrior::kPosteriorMatching}) {
    const Matrix mu0 = vae.encode_mean(x.prev), s0 = vae.encode_sigma(x.prev);
    const Matrix mu1 = vae.encode_mean(x.next), s1 = vae.encode_sigma(x.next);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    std::normal_distribution<double> normal;
    for (int draw = 0; draw < n; ++draw) {
      double v = 0.0;
      for (int k = 0; k < 2; ++k) {
        const double a = normal(rng), b = normal(rng);
        const double z0 = mu0(0, k) + s0(0, k) * a, z1 = mu1(0, k) + s1(0, k) * b;
        v += -std::log(s0(0, k)) - 0.5 * a * a + 0.5 * z0 * z0;  // log q0 - log N(0,1)
        const double log_q1 = -std::log(s1(0, k)) - 0.5 * b * b - 0.5 * std::log(2.0 * std::numbers::pi);
        const double log_p = prior == TransitionPrior::kLaplace
                                 ? std::log(lambda / 2.0) - lambda * std::abs(z1 - mu0(0, k))
                                 : -std::log(s0(0, k)) - 0.5 * std::log(2.0 * std::numbers::pi) -
                                       0.5 * std::pow((z1 - mu0(0, k)) / s0(0, k), 2);
        v += log_q1 - log_p;
      }
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    grad::Tape tape;
    const VaeLossTerms t = vae_loss(tape, vae, x, VaeObjective{1.0, lambda, false, prior}, Matrix::Zero(1, 2), Matrix::Zero(1, 2));
    CHECK(std::abs(t.kl_marginal.scalar() + t.kl_transition.scalar() - mean) <= 3.0 * se);
  }
}

TEST_CASE("PM-VAE transition term vanishes for identical posteriors") {
  Rng rng(11);
  VaeConfig cfg;
  cfg.x_dim = 3;
  cfg.latent_dim = 3;
  VaeModel vae(cfg, rng);
  const synth::PairBatch z = latent_pairs(3, 1.0, 6.0, 32, rng);
  const synth::PairBatch same{z.prev, z.prev};
  grad::Tape tape;
  const VaeLossTerms t = pmvae_loss(tape, vae, same, 1.0, rng);
  CHECK(std::abs(t.kl_transition.scalar()) <= 1e-14);
  CHECK(gaussian_kl(0.3, 0.7, 0.3, 0.7) == 0.0);
  CHECK(gaussian_kl(1.0, 1.0, 0.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("VAE objective validation") {
  Rng rng(12);
  VaeModel vae(VaeConfig{}, rng);
  const synth::PairBatch z = latent_pairs(2, 1.0, 6.0, 8, rng);
  grad::Tape tape;
  CHECK_THROWS_AS(slowvae_loss(tape, vae, z, 0.0, 6.0, rng), InvalidArgument);
  CHECK_THROWS_AS(slowvae_loss(tape, vae, z, 1.0, -1.0, rng), InvalidArgument);
}

TEST_CASE("all estimator losses pass gradient checks at init and after 100 steps") {
  Rng rng(13);
  const synth::PairBatch z = latent_pairs(4, 1.0, 6.0, 4000, rng);
  const synth::PairBatch x = synth::mix(z, synth::make_mixing_stack(4, 1, 0.5, rng));
  const synth::PairBatch small = head(x, 16);
  TrainConfig tc;
  tc.steps = 100;
  tc.batch_size = 64;
  tc.adam.lr = 3e-3;

  auto check_after = [&](grad::ParamStore& store, const grad::LossBuilder& loss, auto&& train) {
    const auto at_init = grad::grad_check(loss, store);
    CHECK(at_init.max_rel_error <= 1e-4);
    CHECK(at_init.checked > 0);
    train();
    const auto trained = grad::grad_check(loss, store);
    CHECK(trained.max_rel_error <= 1e-4);
    CHECK(trained.checked > 0);
  };

  SUBCASE("linear SlowFlow") {
    FlowModel flow(FlowConfig{FlowKind::kLinear, 4}, rng);
    check_after(flow.params(), [&](grad::Tape& t) { return slowflow_nll(t, flow, small, 6.0); },
                [&] { train_slowflow(flow, x, 6.0, tc, rng); });
  }
  SUBCASE("coupling SlowFlow") {
    FlowModel flow(FlowConfig{FlowKind::kCoupling, 4, 2, 8, Activation::kRelu, true}, rng);
    check_after(flow.params(), [&](grad::Tape& t) { return slowflow_nll(t, flow, small, 6.0); },
                [&] { train_slowflow(flow, x, 6.0, tc, rng); });
  }
  const Matrix e0 = normal_matrix(16, 4, 1.0, rng), e1 = normal_matrix(16, 4, 1.0, rng);
  VaeConfig vc;
  vc.x_dim = 4;
  vc.latent_dim = 4;
  vc.hidden = 8;
  SUBCASE("SlowVAE") {
    VaeModel vae(vc, rng);
    const VaeObjective obj{10.0, 6.0, true, TransitionPrior::kLaplace};
    check_after(vae.params(), [&](grad::Tape& t) { return vae_loss(t, vae, small, obj, e0, e1).total; },
                [&] { train_vae(vae, x, obj, tc, rng); });
  }
  SUBCASE("PM-VAE") {
    VaeModel vae(vc, rng);
    const VaeObjective obj{10.0, 1.0, true, TransitionPrior::kPosteriorMatching};
    check_after(vae.params(), [&](grad::Tape& t) { return vae_loss(t, vae, small, obj, e0, e1).total; },
                [&] { train_vae(vae, x, obj, tc, rng); });
  }
  SUBCASE("PCL") {
    PclModel pcl(PclConfig{4, NetKind::kMlp, 8, 1, Activation::kRelu}, rng);
    const auto perm = derangement(16, rng);
    // The zero-initialized head makes every encoder gradient vanish; nudge it.
    for (const char* name : {"head.w", "head.a", "head.b"})
      pcl.params().get(name).value = normal_matrix(1, 4, 0.3, rng);
    check_after(pcl.params(), [&](grad::Tape& t) { return pcl_loss(t, pcl, small, perm); },
                [&] { train_pcl(pcl, x, tc, rng); });
  }
}

TEST_CASE("train log terms sum to the reported loss") {
  Rng rng(14);
  const synth::PairBatch z = latent_pairs(2, 1.0, 6.0, 2000, rng);
  VaeConfig vc;
  vc.hidden = 16;
  VaeModel vae(vc, rng);
  TrainConfig tc;
  tc.steps = 50;
  const VaeObjective obj{10.0, 6.0, true, TransitionPrior::kLaplace};
  const TrainLog log = train_vae(vae, z, obj, tc, rng, 14);
  CHECK(log.records.size() == 50);
  CHECK(log.seed == 14);
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const StepRecord& r = log.records[i];
    CHECK(r.step == static_cast<std::int64_t>(i + 1));
    CHECK(std::abs(r.reconstruction + r.kl_marginal + obj.gamma * r.kl_transition - r.loss) <= 1e-10);
  }
}

TEST_CASE("divergent training raises with the step index") {
  Rng rng(15);
  synth::PairBatch z = latent_pairs(2, 1.0, 6.0, 500, rng);
  z.prev *= 1e150;
  z.next *= 1e150;
  VaeModel vae(VaeConfig{}, rng);
  TrainConfig tc;
  tc.steps = 10;
  try {
    train_vae(vae, z, VaeObjective{}, tc, rng);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("training is deterministic for a seed") {
  const synth::PairBatch z = [] {
    Rng r(16);
    return latent_pairs(3, 1.0, 6.0, 3000, r);
  }();
  auto run = [&] {
    Rng rng(99);
    FlowModel flow(FlowConfig{FlowKind::kCoupling, 3, 2, 8, Activation::kRelu, true}, rng);
    TrainConfig tc;
    tc.steps = 50;
    train_slowflow(flow, z, 6.0, tc, rng);
    return flow.params().get("block1.W1").value;
  };
  CHECK(run() == run());
}

TEST_CASE("PCL discrimination with an oracle encoder and at chance") {
  Rng rng(17);
  const synth::PairBatch z = latent_pairs(5, 1.0, 6.0, 20000, rng);
  PclModel untrained(PclConfig{5, NetKind::kMlp, 16, 1, Activation::kRelu}, rng);
  CHECK(std::abs(pcl_accuracy(untrained, z, rng) - 0.5) <= 0.02);
  PclModel oracle(PclConfig{5, NetKind::kIdentity, 16, 1, Activation::kRelu}, rng);
  TrainConfig tc;
  tc.steps = 1500;
  tc.adam.lr = 0.02;
  train_pcl(oracle, z, tc, rng);
  CHECK(pcl_accuracy(oracle, z, rng) >= 0.99);
  CHECK_THROWS_AS(train_pcl(oracle, head(z, 100), tc, rng), InvalidArgument);
  CHECK_THROWS_AS(derangement(1, rng), InvalidArgument);
  for (int t = 0; t < 20; ++t) {
    const auto p = derangement(7, rng);
    for (int i = 0; i < 7; ++i) CHECK(p[i] != i);
  }
}

TEST_CASE("checkpoints round-trip parameters and manifests") {
  Rng rng(18);
  FlowConfig cfg{FlowKind::kCoupling, 4, 2, 8, Activation::kRelu, true};
  FlowModel flow(cfg, rng);
  for (auto& p : flow.params().params()) p.value += normal_matrix(p.value.rows(), p.value.cols(), 0.1, rng);
  const std::string prefix = (std::filesystem::temp_directory_path() / "slowlab_ckpt_test").string();
  save_checkpoint(prefix, flow.params(), CheckpointManifest{"slowflow", to_json(cfg), 18, 1234});
  const CheckpointManifest m = read_manifest(prefix);
  CHECK(m.kind == "slowflow");
  CHECK(m.seed == 18);
  CHECK(m.step == 1234);
  Rng other(999);
  FlowModel restored(flow_config_from_json(m.config), other);
  load_tensors(prefix, restored.params());
  const Matrix x = normal_matrix(10, 4, 1.0, rng);
  CHECK(restored.transform(x) == flow.transform(x));

  FlowModel wrong(FlowConfig{FlowKind::kLinear, 4}, other);
  CHECK_THROWS_AS(load_tensors(prefix, wrong.params()), Error);
  std::filesystem::remove(prefix + ".json");
  std::filesystem::remove(prefix + ".tensors");
}

TEST_CASE("model configs round-trip through JSON and reject unknown keys") {
  const FlowConfig f{FlowKind::kCoupling, 5, 3, 32, Activation::kSmoothLeakyRelu, false};
  const FlowConfig f2 = flow_config_from_json(to_json(f));
  CHECK(f2.kind == f.kind);
  CHECK(f2.blocks == 3);
  CHECK(f2.activation == Activation::kSmoothLeakyRelu);
  CHECK_FALSE(f2.linear_layers);
  VaeConfig v;
  v.obs_sigma = 0.3;
  CHECK(vae_config_from_json(to_json(v)).obs_sigma == 0.3);
  CHECK(pcl_config_from_json(to_json(PclConfig{})).encoder == NetKind::kMlp);
  CHECK_THROWS_AS(flow_config_from_json({{"dims", 3}}), InvalidArgument);
  CHECK_THROWS_AS(vae_config_from_json({{"encoder", "conv"}}), InvalidArgument);
  CHECK(train_config_from_json(to_json(TrainConfig{})).steps == 10000);
}
