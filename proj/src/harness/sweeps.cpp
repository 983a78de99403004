#include "slowlab/harness/sweeps.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace slowlab::harness {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t scaled_steps(std::size_t steps, bool smoke) { return smoke ? std::max<std::size_t>(steps / 3, 100) : steps; }

ExperimentConfig with_options(ExperimentConfig c, const SweepOptions& o) {
  c.seeds = o.smoke ? std::vector<std::uint64_t>{0, 1} : o.seeds;
  c.estimator.train.steps = scaled_steps(c.estimator.train.steps, o.smoke);
  c.threads = o.threads;
  return c;
}

nlohmann::json ttest_json(const TTest& t) {
  return {{"t", t.t}, {"dof", t.dof}, {"p_value", t.p_value}, {"significant", t.significant}};
}

ExperimentConfig base(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.dataset.count = 20000;
  c.estimator.train.log_every = 100;
  return c;
}

}  // namespace

double SweepTable::mean(std::size_t row, std::size_t estimator) const {
  const auto& aggs = rows.at(row).records.at(estimator).aggregates;
  const auto it = aggs.find(metric);
  return it == aggs.end() ? std::nan("") : it->second.mean;
}

SweepTable run_sweep(const std::string& name, const std::vector<ExperimentConfig>& variants,
                     const std::vector<std::string>& labels, const std::string& axis,
                     const std::vector<double>& values, const std::string& metric, int threads) {
  require(!variants.empty() && variants.size() == labels.size(), "run_sweep: one label per variant");
  require(!values.empty(), "run_sweep: no axis values");
  SweepTable table{name, axis, metric, labels, {}};

  struct Job {
    std::size_t row, variant, seed;
  };
  std::vector<std::vector<ExperimentConfig>> configs(values.size());
  std::vector<Job> jobs;
  table.rows.resize(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    table.rows[r].value = values[r];
    for (std::size_t v = 0; v < variants.size(); ++v) {
      ExperimentConfig c = apply_axis(variants[v], axis, values[r]);
      ResultRecord rec;
      rec.name = c.name;
      rec.config_hash = config_hash(c);
      rec.config = to_json(c);
      rec.seeds.resize(c.seeds.size());
      for (std::size_t s = 0; s < c.seeds.size(); ++s) jobs.push_back({r, v, s});
      table.rows[r].records.push_back(std::move(rec));
      configs[r].push_back(std::move(c));
    }
  }
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const ExperimentConfig& c = configs[j.row][j.variant];
    table.rows[j.row].records[j.variant].seeds[j.seed] = run_seed(c, c.seeds[j.seed]);
  });
  for (SweepRow& row : table.rows) {
    for (ResultRecord& rec : row.records) {
      std::set<std::string> names;
      for (const auto& s : rec.seeds)
        for (const auto& [k, v] : s.metrics) names.insert(k);
      for (const auto& n : names) rec.aggregates[n] = aggregate(rec.values(n));
    }
    if (row.records.size() == 2) {
      const auto a = row.records[0].values(metric), b = row.records[1].values(metric);
      if (a.size() >= 2 && b.size() >= 2) row.comparison = t_test(a, b);
    }
  }
  return table;
}

nlohmann::json to_json(const SweepTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& row : t.rows) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : row.records) records.push_back(to_json(r));
    nlohmann::json j = {{"value", row.value}, {"records", records}};
    if (row.comparison) j["comparison"] = ttest_json(*row.comparison);
    rows.push_back(j);
  }
  return {{"name", t.name}, {"axis", t.axis}, {"metric", t.metric}, {"estimators", t.estimators}, {"rows", rows}};
}

std::string to_csv(const SweepTable& t) {
  std::ostringstream out;
  out << t.axis << ",estimator,metric,mean,sd,n,failures,p_value\n";
  for (const SweepRow& row : t.rows) {
    for (std::size_t e = 0; e < row.records.size(); ++e) {
      const ResultRecord& r = row.records[e];
      for (const auto& [k, a] : r.aggregates) {
        out << fmt_double(row.value) << ',' << t.estimators[e] << ',' << k << ',' << fmt_double(a.mean) << ','
            << fmt_double(a.sd) << ',' << a.n << ',' << r.failures() << ',';
        if (row.comparison && k == t.metric) out << fmt_double(row.comparison->p_value);
        out << '\n';
      }
    }
  }
  return out.str();
}

std::vector<std::string> write_sweep(const SweepTable& t, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::string> paths = {dir + "/" + t.name + ".json", dir + "/" + t.name + ".csv"};
  std::ofstream(paths[0]) << to_json(t).dump(2) << '\n';
  std::ofstream(paths[1]) << to_csv(t);
  return paths;
}

ExperimentConfig ar_depth_slowflow(int dim) {
  ExperimentConfig c = base("ar-depth-slowflow");
  c.dataset.source = "ar";
  c.dataset.dim = dim;
  c.dataset.alpha = 1.0;
  c.dataset.lambda = 1.0;
  c.dataset.mixing.kind = "slrelu";
  c.dataset.mixing.slope = 0.5;
  c.estimator.kind = "slowflow";
  c.estimator.lambda = 1.0;
  c.estimator.network = {{"kind", "coupling"}, {"blocks", 6}, {"hidden", 64}};
  c.estimator.train.steps = 3000;
  c.estimator.train.adam.lr = 3e-3;
  c.metrics = {MetricSpec{"mcc", 0, "pearson"}};
  return c;
}

ExperimentConfig ar_depth_pcl(int dim) {
  ExperimentConfig c = ar_depth_slowflow(dim);
  c.name = "ar-depth-pcl";
  c.estimator.kind = "pcl";
  c.estimator.network = {{"encoder", "mlp"}, {"hidden", 64}, {"hidden_layers", 2}, {"activation", "smooth_leaky_relu"}};
  return c;
}

SweepTable sweep_ar_depth(int dim, const std::vector<int>& layers, const SweepOptions& options) {
  std::vector<double> values(layers.begin(), layers.end());
  return run_sweep("ar-depth", {with_options(ar_depth_slowflow(dim), options), with_options(ar_depth_pcl(dim), options)},
                   {"slowflow", "pcl"}, "layers", values, "mcc_pearson", options.threads);
}

ExperimentConfig kappa_slowvae() {
  ExperimentConfig c = base("kappa-slowvae");
  c.dataset.dim = 2;
  c.dataset.alpha = 1.0;
  c.dataset.lambda = 1.0;
  c.dataset.mixing.kind = "diagonal";
  c.estimator.kind = "slowvae";
  c.estimator.gamma = 1.0;
  c.estimator.lambda = 1.0;
  c.estimator.network = {{"encoder", "mlp"}, {"decoder", "mlp"}, {"obs_sigma", 0.3}};
  c.estimator.train.steps = 8000;
  c.estimator.train.adam.lr = 3e-3;
  return c;
}

ExperimentConfig kappa_slowflow() {
  ExperimentConfig c = kappa_slowvae();
  c.name = "kappa-slowflow";
  c.estimator.kind = "slowflow";
  c.estimator.network = {{"kind", "linear"}};
  c.estimator.train.steps = 3000;
  c.estimator.train.adam.lr = 1e-2;
  return c;
}

SweepTable sweep_kappa(const std::vector<double>& kappas, const SweepOptions& options) {
  return run_sweep("kappa", {with_options(kappa_slowvae(), options), with_options(kappa_slowflow(), options)},
                   {"slowvae", "slowflow"}, "kappa", kappas, "mcc", options.threads);
}

ExperimentConfig alpha_slowflow() {
  ExperimentConfig c = base("alpha-slowflow");
  c.dataset.dim = 4;
  c.dataset.lambda = 6.0;
  c.dataset.mixing.kind = "orthogonal";
  c.estimator.kind = "slowflow";
  c.estimator.lambda = 6.0;
  c.estimator.network = {{"kind", "linear"}};
  c.estimator.train.steps = 3000;
  c.estimator.train.adam.lr = 1e-2;
  return c;
}

SweepTable sweep_alpha(const std::vector<double>& alphas, const SweepOptions& options) {
  return run_sweep("alpha", {with_options(alpha_slowflow(), options)}, {"slowflow"}, "alpha", alphas, "mcc",
                   options.threads);
}

ExperimentConfig expanding_vae(bool posterior_matching) {
  ExperimentConfig c = base(posterior_matching ? "expanding-pmvae" : "expanding-slowvae");
  c.dataset.dim = 5;
  c.dataset.lambda = 6.0;
  c.dataset.mixing.kind = "expanding";
  c.dataset.mixing.out_dim = 50;
  c.estimator.kind = posterior_matching ? "pmvae" : "slowvae";
  c.estimator.network = {{"encoder", "mlp"}, {"decoder", "mlp"}, {"hidden", 64}, {"obs_sigma", 0.1}};
  c.estimator.train.steps = 10000;
  c.estimator.train.adam.lr = 1e-3;
  return c;
}

LapHistogram lap_histogram(const synth::FactorGrid& grid, double lambda, std::size_t samples, std::uint64_t seed) {
  grid.validate();
  require(samples > 0, "lap_histogram: samples must be positive");
  Rng rng = child_rng(seed, 0);
  LapHistogram h{grid, lambda, samples, {}, {}};
  const std::size_t d = static_cast<std::size_t>(grid.num_factors());
  h.lap.assign(d + 1, 0);
  h.uni.assign(d + 1, 0);
  for (int c : synth::changed_factor_counts(synth::lap_transition_sample(grid, lambda, true, samples, rng)))
    ++h.lap[static_cast<std::size_t>(c)];
  if (d >= 2)
    for (int c : synth::changed_factor_counts(synth::uni_transition_sample(grid, samples, rng)))
      ++h.uni[static_cast<std::size_t>(c)];
  return h;
}

nlohmann::json to_json(const LapHistogram& h) {
  return {{"grid", h.grid.sizes}, {"lambda", h.lambda}, {"samples", h.samples}, {"lap", h.lap}, {"uni", h.uni}};
}

std::string to_csv(const LapHistogram& h) {
  std::ostringstream out;
  out << "changed_factors,lap,uni\n";
  for (std::size_t k = 0; k < h.lap.size(); ++k) out << k << ',' << h.lap[k] << ',' << h.uni[k] << '\n';
  return out.str();
}

}  // namespace slowlab::harness
