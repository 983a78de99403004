#include "slowlab/harness/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "slowlab/estimators/checkpoint.hpp"
#include "slowlab/metrics/factor_scores.hpp"
#include "slowlab/metrics/information.hpp"
#include "slowlab/metrics/sap.hpp"
#include "slowlab/natstats/report.hpp"
#include "slowlab/pair_io.hpp"

namespace slowlab::harness {
namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kMetricStream = 3;
constexpr std::uint64_t kEvalStream = 4;

// A VAE latent counts as collapsed when its posterior stays at the prior.
constexpr double kCollapseSigma = 0.9;
constexpr double kCollapseMean = 0.1;

synth::PairBatch sample_sources(const DatasetSpec& spec, Rng& rng) {
  if (spec.source == "ar") {
    const Matrix s = synth::sample_ar_sources(spec.dim, spec.count + 1, {spec.alpha, spec.lambda, 0.0}, rng);
    return synth::sequence_pairs(s);
  }
  synth::SourceChainConfig cfg;
  cfg.dim = spec.dim;
  cfg.alpha = spec.alpha;
  cfg.lambda = spec.lambda;
  cfg.count = spec.count;
  return synth::sample_pairs(cfg, rng);
}

synth::MixingStack make_mixing(const DatasetSpec& spec, Rng& rng) {
  const MixingSpec& m = spec.mixing;
  if (m.kind == "identity") return synth::identity_stack(spec.dim);
  if (m.kind == "orthogonal") return synth::linear_stack(synth::random_orthogonal(spec.dim, rng));
  if (m.kind == "slrelu") return synth::make_mixing_stack(spec.dim, m.layers, m.effective_slope(), rng);
  if (m.kind == "expanding") return synth::expanding_decoder(spec.dim, m.out_dim, rng, m.effective_slope());
  std::vector<double> diag(static_cast<std::size_t>(spec.dim), m.kappa);
  diag[0] = 1.0;
  return synth::diagonal_stack(diag);
}

synth::PairBatch first_rows(const synth::PairBatch& b, std::size_t n) {
  if (n == 0 || n >= static_cast<std::size_t>(b.count())) return b;
  return b.rows(0, static_cast<Eigen::Index>(n));
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void tracks_seed(const ExperimentConfig& config, SeedOutcome& out) {
  const DatasetSpec& d = config.dataset;
  const natstats::TrackSet set = natstats::load_tracks(d.tracks_path);
  natstats::TransitionTable table = natstats::compute_transitions(set.tracks, d.max_frame_gap);
  if (d.normalize) table = natstats::normalize_clip(std::move(table));
  const natstats::StatsReport report = natstats::stats_report(table);
  for (const auto& c : report.columns) {
    out.metrics["alpha_" + c.name] = c.genlap_alpha();
    out.metrics["kurtosis_" + c.name] = c.kurtosis;
    out.metrics["loglik_gain_" + c.name] = (c.fits[0].loglik - c.fits[1].loglik) / static_cast<double>(c.count);
  }
  out.diagnostics["rows"] = static_cast<double>(report.rows);
  out.diagnostics["mean_dt"] = report.mean_dt;
  out.diagnostics["row_errors"] = static_cast<double>(set.errors.size());
}

}  // namespace

std::size_t ResultRecord::failures() const {
  std::size_t n = 0;
  for (const auto& s : seeds) n += s.ok ? 0 : 1;
  return n;
}

std::vector<double> ResultRecord::values(const std::string& metric) const {
  std::vector<double> v;
  for (const auto& s : seeds)
    if (s.ok) {
      const auto it = s.metrics.find(metric);
      if (it != s.metrics.end()) v.push_back(it->second);
    }
  return v;
}

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Rng rng = child_rng(seed, kDataStream);
  Dataset d;
  d.sources = sample_sources(spec, rng);
  if (spec.shuffle_per_factor) d.sources = synth::shuffle_per_factor(d.sources, rng);
  d.mixing = make_mixing(spec, rng);
  d.observations = synth::mix(d.sources, d.mixing);
  if (spec.eval_count > 0) {
    Rng eval_rng = child_rng(seed, kEvalStream);
    DatasetSpec e = spec;
    e.count = spec.eval_count;
    d.eval_sources = sample_sources(e, eval_rng);
    d.eval_observations = synth::mix(d.eval_sources, d.mixing);
  } else {
    d.eval_sources = d.sources;
    d.eval_observations = d.observations;
  }
  return d;
}

SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::string& artifact_dir) {
  SeedOutcome out;
  out.seed = seed;
  try {
    if (config.dataset.source == "tracks") {
      tracks_seed(config, out);
      out.ok = true;
      return out;
    }
    const Dataset data = make_dataset(config.dataset, seed);
    Rng rng = child_rng(seed, kModelStream);
    const EstimatorSpec& e = config.estimator;
    const std::string& kind = e.kind;

    std::function<Matrix(const Matrix&)> encode;
    grad::ParamStore* params = nullptr;
    nlohmann::json model_config;
    std::optional<est::FlowModel> flow;
    std::optional<est::VaeModel> vae;
    std::optional<est::PclModel> pcl;
    est::TrainLog log;
    if (kind == "slowflow") {
      flow.emplace(flow_config(config), rng);
      log = est::train_slowflow(*flow, data.observations, e.lambda, e.train, rng, seed);
      encode = [&](const Matrix& x) { return flow->transform(x); };
      params = &flow->params();
      model_config = est::to_json(flow->config());
      out.diagnostics["eval_nll"] = est::slowflow_nll_value(*flow, data.eval_observations, e.lambda);
    } else if (kind == "pcl") {
      pcl.emplace(pcl_config(config), rng);
      log = est::train_pcl(*pcl, data.observations, e.train, rng, seed);
      encode = [&](const Matrix& x) { return pcl->encode(x); };
      params = &pcl->params();
      model_config = est::to_json(pcl->config());
      Rng acc_rng = child_rng(seed, kMetricStream + 100);
      out.diagnostics["pcl_accuracy"] = est::pcl_accuracy(*pcl, data.eval_observations, acc_rng);
    } else {
      vae.emplace(vae_config(config), rng);
      const est::VaeObjective objective{
          e.gamma, e.lambda, e.bidirectional,
          kind == "pmvae" ? est::TransitionPrior::kPosteriorMatching : est::TransitionPrior::kLaplace};
      log = est::train_vae(*vae, data.observations, objective, e.train, rng, seed);
      encode = [&](const Matrix& x) { return vae->encode_mean(x); };
      params = &vae->params();
      model_config = est::to_json(vae->config());
      const Matrix mu = vae->encode_mean(data.eval_observations.prev);
      const Matrix sigma = vae->encode_sigma(data.eval_observations.prev);
      int collapsed = 0;
      for (Eigen::Index k = 0; k < mu.cols(); ++k) {
        const double s = sigma.col(k).mean(), m = mu.col(k).cwiseAbs().mean();
        out.diagnostics["mean_sigma_" + std::to_string(k)] = s;
        out.diagnostics["mean_abs_mu_" + std::to_string(k)] = m;
        if (s >= kCollapseSigma && m <= kCollapseMean) ++collapsed;
      }
      out.diagnostics["collapsed_latents"] = collapsed;
    }
    out.train.steps = log.records.empty() ? 0 : static_cast<std::size_t>(log.records.back().step);
    out.train.final_loss = log.records.empty() ? 0.0 : log.records.back().loss;
    out.train.wall_seconds = log.wall_seconds;

    const Matrix latents_all = encode(data.eval_observations.prev);
    Rng metric_rng = child_rng(seed, kMetricStream);
    for (const MetricSpec& m : config.metrics) {
      const synth::PairBatch rows = first_rows(data.eval_sources, m.samples);
      const metrics::MetricInput input{latents_all.topRows(rows.count()), rows.prev, {}};
      if (m.name == "mcc") {
        const metrics::Correlation c =
            m.correlation == "pearson" ? metrics::Correlation::kPearson : metrics::Correlation::kSpearman;
        out.metrics[m.correlation == "pearson" ? "mcc_pearson" : "mcc"] = metrics::mcc(input, {c}, metric_rng).score;
      } else if (m.name == "mig") {
        out.metrics["mig"] = metrics::mig(input);
      } else if (m.name == "modularity") {
        out.metrics["modularity"] = metrics::modularity(input);
      } else if (m.name == "sap") {
        out.metrics["sap"] = metrics::sap(input).score;
      } else {
        const metrics::GaussianFactorSampler sampler(config.dataset.dim);
        const metrics::Encoder factor_encoder = [&](const Matrix& f) { return encode(data.mixing.apply(f)); };
        if (m.name == "factorvae") {
          metrics::FactorVaeOptions o;
          if (m.samples > 0) o.eval_votes = m.samples;
          out.metrics["factorvae"] = metrics::factorvae_score(sampler, factor_encoder, o, metric_rng).score;
        } else {
          metrics::BetaVaeOptions o;
          if (m.samples > 0) o.eval_points = m.samples;
          out.metrics["betavae"] = metrics::betavae_score(sampler, factor_encoder, o, metric_rng).score;
        }
      }
    }

    if (!artifact_dir.empty() && (config.save_checkpoints || config.save_latents)) {
      std::filesystem::create_directories(artifact_dir);
      const std::string stem = artifact_dir + "/seed" + std::to_string(seed);
      if (config.save_checkpoints) {
        est::save_checkpoint(stem, *params, est::CheckpointManifest{kind, model_config, seed, static_cast<std::int64_t>(out.train.steps)});
        out.artifacts.push_back(stem + ".json");
        out.artifacts.push_back(stem + ".tensors");
      }
      if (config.save_latents) {
        std::ofstream f(stem + "-latents.csv");
        synth::write_matrix_csv(f, latents_all, "z");
        std::ofstream g(stem + "-factors.csv");
        synth::write_matrix_csv(g, data.eval_sources.prev, "s");
        out.artifacts.push_back(stem + "-latents.csv");
        out.artifacts.push_back(stem + "-factors.csv");
      }
    }
    out.ok = true;
  } catch (const std::exception& ex) {
    out.ok = false;
    out.error = ex.what();
    out.metrics.clear();
  }
  return out;
}

ResultRecord run_experiment(const ExperimentConfig& config, const std::string& artifact_dir) {
  config.validate();
  ResultRecord r;
  r.name = config.name;
  r.config_hash = config_hash(config);
  r.config = to_json(config);
  std::vector<std::uint64_t> seeds = config.seeds;
  if (config.dataset.source == "tracks") seeds.resize(1);
  r.seeds.resize(seeds.size());
  parallel_for(seeds.size(), config.threads,
               [&](std::size_t i) { r.seeds[i] = run_seed(config, seeds[i], artifact_dir); });
  std::set<std::string> names;
  for (const auto& s : r.seeds)
    for (const auto& [k, v] : s.metrics) names.insert(k);
  for (const auto& n : names) {
    const std::vector<double> v = r.values(n);
    r.aggregates[n] = aggregate(v);
  }
  for (const auto& s : r.seeds) r.artifacts.insert(r.artifacts.end(), s.artifacts.begin(), s.artifacts.end());
  return r;
}

nlohmann::json to_json(const ResultRecord& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    nlohmann::json j = {{"seed", s.seed},
                        {"ok", s.ok},
                        {"metrics", s.metrics},
                        {"diagnostics", s.diagnostics},
                        {"train",
                         {{"steps", s.train.steps},
                          {"final_loss", s.train.final_loss},
                          {"wall_seconds", s.train.wall_seconds}}}};
    if (!s.ok) j["error"] = s.error;
    seeds.push_back(j);
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [k, a] : r.aggregates) agg[k] = {{"mean", a.mean}, {"sd", a.sd}, {"n", a.n}};
  return {{"name", r.name},       {"config_hash", r.config_hash}, {"config", r.config},
          {"seeds", seeds},       {"aggregates", agg},            {"artifacts", r.artifacts},
          {"failures", r.failures()}};
}

nlohmann::json metrics_json(const ResultRecord& r) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : r.seeds) j.push_back({{"seed", s.seed}, {"metrics", s.metrics}});
  return j;
}

std::string to_csv(const ResultRecord& r) {
  std::ostringstream out;
  out << "seed";
  for (const auto& [k, a] : r.aggregates) out << ',' << k;
  out << '\n';
  for (const auto& s : r.seeds) {
    out << s.seed;
    for (const auto& [k, a] : r.aggregates) {
      out << ',';
      const auto it = s.metrics.find(k);
      if (it != s.metrics.end()) out << fmt_double(it->second);
    }
    out << '\n';
  }
  for (const char* row : {"mean", "sd"}) {
    out << row;
    for (const auto& [k, a] : r.aggregates) out << ',' << fmt_double(row[0] == 'm' ? a.mean : a.sd);
    out << '\n';
  }
  return out.str();
}

std::string record_dir(const ExperimentConfig& config) {
  const std::string base = config.output_dir.empty() ? default_output_dir() : config.output_dir;
  return base + "/" + config.name + "-" + config_hash(config);
}

std::vector<std::string> write_record(ResultRecord& record, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::string> paths = {dir + "/result.json", dir + "/summary.csv"};
  for (const auto& p : paths) record.artifacts.push_back(p);
  std::ofstream(paths[0]) << to_json(record).dump(2) << '\n';
  std::ofstream(paths[1]) << to_csv(record);
  return paths;
}

ResultRecord run(const ExperimentConfig& config) {
  const std::string dir = record_dir(config);
  ResultRecord r = run_experiment(config, dir);
  write_record(r, dir);
  return r;
}

}  // namespace slowlab::harness
