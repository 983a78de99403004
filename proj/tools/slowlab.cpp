// slowlab command-line interface.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "slowlab/harness/selftest.hpp"
#include "slowlab/harness/sweeps.hpp"
#include "slowlab/metrics/factor_scores.hpp"
#include "slowlab/metrics/information.hpp"
#include "slowlab/metrics/sap.hpp"
#include "slowlab/natstats/report.hpp"
#include "slowlab/pair_io.hpp"

using namespace slowlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
  std::string format;  // empty: json, except fit-stats which prints text
};

std::string out_dir(const Globals& g) { return g.out.empty() ? harness::default_output_dir() : g.out; }

harness::ExperimentConfig config_or_default(const Globals& g) {
  harness::ExperimentConfig c = g.config.empty() ? harness::ExperimentConfig{} : harness::load_config(g.config);
  if (g.seed) c.seeds = {*g.seed};
  if (!g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

void print_record(const harness::ResultRecord& r, const std::string& format) {
  if (format == "csv") {
    std::cout << harness::to_csv(r);
    return;
  }
  nlohmann::json j = harness::to_json(r);
  j.erase("config");
  std::cout << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw harness::ConfigError("not a number list: '" + s + "'");
    }
  }
  if (v.empty()) throw harness::ConfigError("empty list");
  return v;
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw harness::ConfigError("cannot open " + path);
  return synth::read_matrix_csv(in);
}

// ---- gen-data ----
struct GenData {
  harness::DatasetSpec spec;
  std::string mixing = "orthogonal";
  int layers = 1;
  double slope = 0.0;
  int out_dim = 0;
  double kappa = 1.0;
};

int gen_data(const GenData& o, const Globals& g) {
  harness::DatasetSpec spec = g.config.empty() ? o.spec : harness::load_config(g.config).dataset;
  if (g.config.empty()) {
    spec.mixing.kind = o.mixing;
    spec.mixing.layers = o.layers;
    if (o.slope > 0.0) spec.mixing.slope = o.slope;
    spec.mixing.out_dim = o.out_dim;
    spec.mixing.kappa = o.kappa;
  }
  harness::ExperimentConfig check;
  check.dataset = spec;
  check.estimator.kind = spec.mixing.kind == "expanding" ? "slowvae" : "slowflow";
  check.validate();
  if (spec.source == "tracks") throw harness::ConfigError("gen-data: tracks are read with fit-stats");
  const harness::Dataset d = harness::make_dataset(spec, g.seed.value_or(0));
  const std::string dir = out_dir(g);
  fs::create_directories(dir);
  const std::string ext = g.format == "csv" ? ".csv" : ".bin";
  synth::save_pairs(dir + "/observations" + ext, d.observations);
  synth::save_pairs(dir + "/sources" + ext, d.sources);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : d.mixing.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      std::vector<double> row(l.weight.cols());
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) row[j] = l.weight(i, j);
      w.push_back(row);
    }
    nlohmann::json lj = {{"weight", w}};
    if (l.slope) lj["slope"] = *l.slope;
    layers.push_back(lj);
  }
  harness::ExperimentConfig cfg;
  cfg.dataset = spec;
  std::ofstream(dir + "/dataset.json") << nlohmann::json{{"dataset", harness::to_json(cfg)["dataset"]},
                                                         {"seed", g.seed.value_or(0)},
                                                         {"pairs", d.observations.count()},
                                                         {"mixing_layers", layers}}
                                              .dump(2)
                                       << '\n';
  std::cerr << "wrote " << d.observations.count() << " pairs to " << dir << '\n';
  return kExitOk;
}

// ---- fit-stats ----
struct FitStats {
  std::string input;
  int max_frame_gap = 1;
  bool raw = false;
  bool diagnostic = false;
  bool keep_zeros = false;
};

int fit_stats(const FitStats& o, const Globals& g) {
  const natstats::TrackSet set = natstats::load_tracks(o.input);
  for (const auto& e : set.errors) std::cerr << o.input << ":" << e.line << ": " << e.message << '\n';
  natstats::TransitionTable table = natstats::compute_transitions(set.tracks, o.max_frame_gap);
  if (!o.raw) table = natstats::normalize_clip(std::move(table));
  natstats::StatsOptions stats_opts;
  stats_opts.drop_zeros = !o.keep_zeros;
  const natstats::StatsReport report = natstats::stats_report(table, stats_opts);
  nlohmann::json j = natstats::to_json(report);
  j["input"] = o.input;
  j["row_errors"] = set.errors.size();
  if (g.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else if (g.format == "csv") {
    std::cout << "column,family,param,value\n";
    for (const auto& col : j["columns"]) {
      std::cout << col["name"].get<std::string>() << ",,kurtosis," << col["kurtosis"].dump() << '\n';
      std::cout << col["name"].get<std::string>() << ",,zeros," << col["zeros"].dump() << '\n';
      for (const auto& f : col["fits"]) {
        for (const auto& [k, v] : f["params"].items())
          std::cout << col["name"].get<std::string>() << ',' << f["family"].get<std::string>() << ',' << k << ','
                    << v.dump() << '\n';
        std::cout << col["name"].get<std::string>() << ',' << f["family"].get<std::string>() << ",loglik,"
                  << f["loglik"].dump() << '\n';
      }
    }
  } else {
    std::cout << natstats::to_text(report);
  }
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    std::ofstream(g.out + "/stats_report.json") << j.dump(2) << '\n';
    std::ofstream(g.out + "/stats_report.txt") << natstats::to_text(report);
    if (o.diagnostic) {
      Rng rng = child_rng(g.seed.value_or(0), 0);
      std::ofstream(g.out + "/dependence.json") << natstats::to_json(natstats::dependence_diagnostic(table, rng)).dump()
                                                << '\n';
    }
  }
  return kExitOk;
}

// ---- train / run ----
int train(const Globals& g) {
  if (g.config.empty()) throw harness::ConfigError("train needs --config");
  harness::ExperimentConfig c = config_or_default(g);
  c.seeds.resize(1);
  c.save_checkpoints = true;
  const std::string dir = harness::record_dir(c);
  const harness::SeedOutcome s = harness::run_seed(c, c.seeds[0], dir);
  if (!s.ok) {
    std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
    return kExitFailure;
  }
  std::cout << nlohmann::json{{"seed", s.seed},
                              {"steps", s.train.steps},
                              {"final_loss", s.train.final_loss},
                              {"metrics", s.metrics},
                              {"checkpoint", s.artifacts}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

int run(const Globals& g) {
  if (g.config.empty()) throw harness::ConfigError("run needs --config");
  const harness::ExperimentConfig c = config_or_default(g);
  if (c.sweep) {
    const harness::SweepTable t =
        harness::run_sweep(c.name, {c}, {c.estimator.kind}, c.sweep->axis, c.sweep->values,
                           c.metrics.empty() ? "mcc" : c.metrics[0].name, c.threads);
    const auto paths = harness::write_sweep(t, c.output_dir.empty() ? harness::default_output_dir() : c.output_dir);
    std::cout << (g.format == "csv" ? harness::to_csv(t) : harness::to_json(t).dump(2) + "\n");
    std::size_t failed = 0, total = 0;
    for (const auto& row : t.rows)
      for (const auto& r : row.records) {
        failed += r.failures();
        total += r.seeds.size();
      }
    return failed == total ? kExitFailure : kExitOk;
  }
  const harness::ResultRecord r = harness::run(c);
  print_record(r, g.format);
  for (const auto& s : r.seeds)
    if (!s.ok) std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
  return r.failures() == r.seeds.size() ? kExitFailure : kExitOk;
}

// ---- eval ----
struct Eval {
  std::string latents;
  std::string factors;
  std::string metrics = "mcc,mig,sap,modularity";
  std::vector<int> categorical;
  std::string correlation = "spearman";
};

int eval(const Eval& o, const Globals& g) {
  metrics::MetricInput in{read_matrix(o.latents), read_matrix(o.factors), {}};
  if (in.latents.rows() != in.factors.rows()) throw harness::ConfigError("latents and factors differ in row count");
  if (!o.categorical.empty()) {
    in.factor_kinds.assign(static_cast<std::size_t>(in.factors.cols()), metrics::FactorKind::kContinuous);
    for (int c : o.categorical) {
      if (c < 0 || c >= in.factors.cols()) throw harness::ConfigError("categorical column out of range");
      in.factor_kinds[c] = metrics::FactorKind::kCategorical;
    }
  }
  Rng rng = child_rng(g.seed.value_or(0), 3);
  nlohmann::json out = nlohmann::json::object();
  std::stringstream ss(o.metrics);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "mcc") {
      metrics::MccOptions opt;
      opt.correlation = o.correlation == "pearson" ? metrics::Correlation::kPearson : metrics::Correlation::kSpearman;
      opt.categorical_relabel = !o.categorical.empty();
      const metrics::MccReport r = metrics::mcc(in, opt, rng);
      out["mcc"] = r.score;
      out["mcc_assignment"] = r.assignment;
      if (!r.warnings.empty()) out["warnings"] = r.warnings;
    } else if (name == "mig") {
      out["mig"] = metrics::mig(in);
    } else if (name == "sap") {
      out["sap"] = metrics::sap(in).score;
    } else if (name == "modularity") {
      out["modularity"] = metrics::modularity(in);
    } else {
      throw harness::ConfigError("eval: unknown metric '" + name + "' (factorvae and betavae need a model; use run)");
    }
  }
  if (g.format == "csv") {
    for (const auto& [k, v] : out.items())
      if (v.is_number()) std::cout << k << ',' << v.dump() << '\n';
  } else {
    std::cout << out.dump(2) << '\n';
  }
  return kExitOk;
}

// ---- sweep ----
struct Sweep {
  std::string kind;
  int dim = 5;
  std::string layers = "1,2,3,4,5";
  std::string kappas = "0.2,0.4,0.6,0.8,1.0";
  std::string alphas = "0.5,1.0,2.0";
  int seeds = 10;
  bool smoke = false;
  int threads = 0;
  double lambda = 1.0;
  std::size_t samples = 100000;
  std::string grid = "3,6,40,32,32";
};

int sweep(const Sweep& o, const Globals& g) {
  const std::string dir = out_dir(g);
  if (o.kind == "lap-histogram") {
    synth::FactorGrid grid;
    for (double v : parse_list(o.grid)) grid.sizes.push_back(static_cast<int>(v));
    const harness::LapHistogram h = harness::lap_histogram(grid, o.lambda, o.samples, g.seed.value_or(0));
    fs::create_directories(dir);
    std::ofstream(dir + "/lap-histogram.json") << harness::to_json(h).dump(2) << '\n';
    std::ofstream(dir + "/lap-histogram.csv") << harness::to_csv(h);
    std::cout << (g.format == "csv" ? harness::to_csv(h) : harness::to_json(h).dump(2) + "\n");
    return kExitOk;
  }
  harness::SweepOptions opt;
  opt.seeds.clear();
  const std::uint64_t first = g.seed.value_or(0);
  for (int s = 0; s < o.seeds; ++s) opt.seeds.push_back(first + static_cast<std::uint64_t>(s));
  opt.smoke = o.smoke;
  opt.threads = o.threads;
  harness::SweepTable t;
  if (o.kind == "ar-depth") {
    std::vector<int> layers;
    for (double v : parse_list(o.layers)) layers.push_back(static_cast<int>(v));
    t = harness::sweep_ar_depth(o.dim, layers, opt);
  } else if (o.kind == "kappa") {
    t = harness::sweep_kappa(parse_list(o.kappas), opt);
  } else {
    t = harness::sweep_alpha(parse_list(o.alphas), opt);
  }
  harness::write_sweep(t, dir);
  if (g.format == "csv") {
    std::cout << harness::to_csv(t);
  } else {
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      std::printf("%s=%g", t.axis.c_str(), t.rows[r].value);
      for (std::size_t e = 0; e < t.estimators.size(); ++e) {
        const auto& agg = t.rows[r].records[e].aggregates;
        const auto it = agg.find(t.metric);
        if (it != agg.end())
          std::printf("  %s %s %.2f +- %.2f", t.estimators[e].c_str(), t.metric.c_str(), it->second.mean, it->second.sd);
      }
      if (t.rows[r].comparison) std::printf("  p=%.3g", t.rows[r].comparison->p_value);
      std::printf("\n");
    }
    std::printf("wrote %s/%s.{json,csv}\n", dir.c_str(), t.name.c_str());
  }
  return kExitOk;
}

// ---- gradcheck ----
int gradcheck(bool closed_form, const Globals& g) {
  bool ok = true;
  for (const auto& c : harness::gradient_suite(g.seed.value_or(0))) {
    std::printf("%-18s %-8s max rel err %.3e over %zu coords (%zu at kinks)  %s\n", c.estimator.c_str(),
                c.stage.c_str(), c.result.max_rel_error, c.result.checked, c.result.excluded, c.pass ? "ok" : "FAIL");
    ok = ok && c.pass;
  }
  if (closed_form) {
    const harness::ClosedFormSuite s = harness::closed_form_suite(50, 1000000, g.seed.value_or(0));
    std::printf("closed-form terms: %zu of %zu checks within tolerance (%.1f s)\n", s.checks.size() - s.failures(),
                s.checks.size(), s.seconds);
    for (const auto& c : s.checks)
      if (!c.pass)
        std::printf("  %s config %d: %.10g vs %.10g (tol %.3g)\n", c.term.c_str(), c.config, c.value, c.reference,
                    c.tolerance);
    ok = ok && s.failures() == 0;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slowlab: temporally sparse disentanglement experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides the config's seed list)");
  app.add_option("--out", g.out, "Output directory (default: $SLOWLAB_OUT or ./results)");
  app.add_option("--config", g.config, "Experiment config JSON");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  GenData gd;
  auto* gen = app.add_subcommand("gen-data", "Sample source pairs, mix them and write pair files");
  gen->add_option("--source", gd.spec.source, "pairs | ar")->check(CLI::IsMember({"pairs", "ar"}));
  gen->add_option("--dim", gd.spec.dim, "Source dimension");
  gen->add_option("--alpha", gd.spec.alpha, "Transition / innovation shape");
  gen->add_option("--lambda", gd.spec.lambda, "Transition / innovation rate");
  gen->add_option("--count", gd.spec.count, "Number of pairs");
  gen->add_option("--mixing", gd.mixing, "identity | orthogonal | slrelu | expanding | diagonal");
  gen->add_option("--layers", gd.layers, "slrelu mixing depth");
  gen->add_option("--slope", gd.slope, "Smooth leaky ReLU slope");
  gen->add_option("--out-dim", gd.out_dim, "Observation width for expanding mixing");
  gen->add_option("--kappa", gd.kappa, "Minor-axis scale for diagonal mixing");
  gen->add_flag("--shuffle-per-factor", gd.spec.shuffle_per_factor, "Break temporal pairing per factor");

  FitStats fs_opts;
  auto* fit = app.add_subcommand("fit-stats", "Transition statistics of object-mask tracks");
  fit->add_option("--input", fs_opts.input, "Tracks CSV")->required();
  fit->add_option("--max-frame-gap", fs_opts.max_frame_gap, "Largest frame distance within a pair")
      ->check(CLI::PositiveNumber);
  fit->add_flag("--raw", fs_opts.raw, "Skip normalization and clipping");
  fit->add_flag("--keep-zeros", fs_opts.keep_zeros, "Fit exact-zero changes instead of counting them apart");
  fit->add_flag("--diagnostic", fs_opts.diagnostic, "Also write the dependence diagnostic (needs --out)");

  auto* train_cmd = app.add_subcommand("train", "Train one estimator for one seed and save a checkpoint");
  auto* run_cmd = app.add_subcommand("run", "Run a full experiment config");

  Eval ev;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics on stored latents and factors");
  eval_cmd->add_option("--latents", ev.latents, "Latents CSV")->required();
  eval_cmd->add_option("--factors", ev.factors, "Factors CSV")->required();
  eval_cmd->add_option("--metrics", ev.metrics, "Comma-separated: mcc,mig,sap,modularity");
  eval_cmd->add_option("--categorical", ev.categorical, "Categorical factor columns")->delimiter(',');
  eval_cmd->add_option("--correlation", ev.correlation, "MCC correlation")
      ->check(CLI::IsMember({"spearman", "pearson"}));

  Sweep sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Predefined sweeps");
  sweep_cmd->add_option("kind", sw.kind, "ar-depth | kappa | alpha | lap-histogram")
      ->required()
      ->check(CLI::IsMember({"ar-depth", "kappa", "alpha", "lap-histogram"}));
  sweep_cmd->add_option("--dim", sw.dim, "Source dimension (ar-depth)");
  sweep_cmd->add_option("--layers", sw.layers, "Mixing depths (ar-depth)");
  sweep_cmd->add_option("--kappas", sw.kappas, "Minor-axis scales (kappa)");
  sweep_cmd->add_option("--alphas", sw.alphas, "Transition shapes (alpha)");
  sweep_cmd->add_option("--seeds", sw.seeds, "Number of seeds")->check(CLI::Range(2, 1000));
  sweep_cmd->add_flag("--smoke", sw.smoke, "Two seeds and shorter training");
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (0: all cores)");
  sweep_cmd->add_option("--lambda", sw.lambda, "LAP rate (lap-histogram)");
  sweep_cmd->add_option("--samples", sw.samples, "Pairs drawn (lap-histogram)");
  sweep_cmd->add_option("--grid", sw.grid, "Factor sizes (lap-histogram)");

  bool closed_form = false;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of every estimator loss");
  grad_cmd->add_flag("--closed-form", closed_form, "Also check the closed-form KL terms by Monte Carlo");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*gen) return gen_data(gd, g);
    if (*fit) return fit_stats(fs_opts, g);
    if (*train_cmd) return train(g);
    if (*run_cmd) return run(g);
    if (*eval_cmd) return eval(ev, g);
    if (*sweep_cmd) return sweep(sw, g);
    if (*grad_cmd) return gradcheck(closed_form, g);
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
