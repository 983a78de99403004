#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slowlab/harness/sweeps.hpp"
#include "slowlab/natstats/tracks.hpp"

using namespace slowlab;
using namespace slowlab::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig minimal() {
  ExperimentConfig c;
  c.name = "minimal";
  c.seeds = {3};
  c.dataset.dim = 2;
  c.dataset.count = 5000;
  c.estimator.network = {{"kind", "linear"}};
  c.estimator.train.steps = 500;
  c.estimator.train.adam.lr = 1e-2;
  c.threads = 1;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slowlab_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> csv_row(const std::string& text, const std::string& first) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!cells.empty() && cells[0] == first) return cells;
  }
  return {};
}

}  // namespace

TEST_CASE("aggregate and pooled t-test") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 4, 6, 8, 10.5};
  const Aggregate g = aggregate(a);
  CHECK(g.mean == 3.0);
  CHECK(g.sd == doctest::Approx(std::sqrt(2.5)).epsilon(1e-14));
  CHECK(aggregate(std::vector<double>{7.0}).sd == 0.0);
  // Reference values from an independent statistics package.
  const TTest t = t_test(a, b);
  CHECK(t.t == doctest::Approx(-1.8831158916154396).epsilon(1e-12));
  CHECK(t.dof == 8.0);
  CHECK(t.p_value == doctest::Approx(0.09644216162407057).epsilon(1e-9));
  CHECK_FALSE(t.significant);
  const TTest u = t_test(std::vector<double>{0.3, 0.1, 0.4, 0.15, 0.9, 0.26}, std::vector<double>{0.5, 0.35, 0.8, 0.97});
  CHECK(u.t == doctest::Approx(-1.6418106008862323).epsilon(1e-12));
  CHECK(u.p_value == doctest::Approx(0.13925597548469756).epsilon(1e-9));
  const TTest w = t_test(std::vector<double>{1, 1.1, 0.9, 1.05}, std::vector<double>{2, 2.1, 1.9, 2.05});
  CHECK(w.significant);
  CHECK(t_test(std::vector<double>{1, 1}, std::vector<double>{1, 1}).p_value == 1.0);
  CHECK_THROWS_AS(t_test(std::vector<double>{1}, b), InvalidArgument);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int threads : {1, 3}) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, threads, [](std::size_t i) {
                      if (i == 7) throw Error("boom");
                    }),
                    Error);
  }
}

TEST_CASE("config defaults, round trip and hashing") {
  const ExperimentConfig d = config_from_json(nlohmann::json::object());
  CHECK(d.seeds.size() == 10);
  CHECK(d.estimator.gamma == 10.0);
  CHECK(d.estimator.lambda == 6.0);
  CHECK(d.metrics.size() == 1);
  CHECK(d.metrics[0].name == "mcc");

  const ExperimentConfig c = minimal();
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  ExperimentConfig other = c;
  other.output_dir = "/somewhere/else";
  other.threads = 4;
  CHECK(config_hash(other) == config_hash(c));
  other.seeds = {4};
  CHECK(config_hash(other) != config_hash(c));

  const auto j = nlohmann::json::parse(R"({"metrics": ["mcc", {"name": "sap", "samples": 500}]})");
  const ExperimentConfig m = config_from_json(j);
  CHECK(m.metrics[1].name == "sap");
  CHECK(m.metrics[1].samples == 500);
}

TEST_CASE("config rejects unknown keys and bad values") {
  auto rejects = [](const char* text, const char* fragment) {
    CHECK_THROWS_WITH_AS(config_from_json(nlohmann::json::parse(text)), doctest::Contains(fragment), ConfigError);
  };
  rejects(R"({"seed": 1})", "'seed'");
  rejects(R"({"dataset": {"mixing": {"depth": 2}}})", "'dataset.mixing.depth'");
  rejects(R"({"estimator": {"train": {"epochs": 2}}})", "epochs");
  rejects(R"({"estimator": {"network": {"dim": 3}}})", "set by the dataset");
  rejects(R"({"estimator": {"network": {"blocks": "six"}}})", "estimator.network");
  rejects(R"({"estimator": {"kind": "gan"}})", "estimator.kind");
  rejects(R"({"dataset": {"dim": "four"}})", "dataset.dim");
  rejects(R"({"dataset": {"source": "tracks"}})", "tracks_path");
  rejects(R"({"metrics": ["dci"]})", "dci");
  rejects(R"({"seeds": []})", "seeds");
  rejects(R"({"sweep": {"axis": "depth", "values": [1]}})", "sweep.axis");
  rejects(R"({"dataset": {"mixing": {"kind": "expanding", "out_dim": 20}}})", "slowflow");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("sweep axes rewrite the config") {
  const ExperimentConfig c = ar_depth_slowflow(5);
  const ExperimentConfig l3 = apply_axis(c, "layers", 3);
  CHECK(l3.dataset.mixing.layers == 3);
  CHECK(l3.name == "ar-depth-slowflow-layers3");
  CHECK(apply_axis(kappa_slowvae(), "kappa", 0.2).dataset.mixing.kappa == 0.2);
  const ExperimentConfig lam = apply_axis(alpha_slowflow(), "lambda", 2.0);
  CHECK(lam.dataset.lambda == 2.0);
  CHECK(lam.estimator.lambda == 2.0);
  CHECK_THROWS_AS(apply_axis(c, "colour", 1), ConfigError);
  for (const ExperimentConfig& p : {ar_depth_slowflow(5), ar_depth_pcl(5), kappa_slowvae(), kappa_slowflow(),
                                    alpha_slowflow(), expanding_vae(false), expanding_vae(true)})
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("minimal run completes quickly and writes a record") {
  ExperimentConfig c = minimal();
  c.output_dir = scratch("run").string();
  c.save_checkpoints = true;
  c.save_latents = true;
  const auto start = std::chrono::steady_clock::now();
  const ResultRecord r = run(c);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 60.0);
  REQUIRE(r.seeds.size() == 1);
  CHECK(r.seeds[0].ok);
  CHECK(r.failures() == 0);
  CHECK(r.seeds[0].train.steps == 500);
  CHECK(r.seeds[0].metrics.at("mcc") > 90.0);
  CHECK(r.config_hash == config_hash(c));
  const std::string dir = record_dir(c);
  for (const char* f : {"result.json", "summary.csv", "seed3.json", "seed3.tensors", "seed3-latents.csv"})
    CHECK(fs::exists(fs::path(dir) / f));

  std::ifstream in(fs::path(dir) / "result.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["config_hash"] == r.config_hash);
  CHECK(j["seeds"][0]["metrics"]["mcc"].get<double>() == r.seeds[0].metrics.at("mcc"));
  fs::remove_all(c.output_dir);
}

TEST_CASE("reruns reproduce metric values exactly, whatever the thread count") {
  ExperimentConfig c = minimal();
  c.seeds = {0, 1, 2};
  c.metrics = {MetricSpec{"mcc"}, MetricSpec{"mig"}, MetricSpec{"sap"}, MetricSpec{"modularity"}};
  const ResultRecord a = run_experiment(c);
  c.threads = 3;
  const ResultRecord b = run_experiment(c);
  CHECK(metrics_json(a).dump() == metrics_json(b).dump());
  CHECK(a.config_hash == b.config_hash);
}

TEST_CASE("aggregates match the per-seed values and the CSV") {
  ExperimentConfig c = minimal();
  c.seeds = {0, 1, 2, 3};
  c.metrics = {MetricSpec{"mcc"}, MetricSpec{"mcc", 0, "pearson"}};
  const ResultRecord r = run_experiment(c);
  CHECK(r.aggregates.size() == 2);
  for (const auto& [name, agg] : r.aggregates) {
    const auto v = r.values(name);
    REQUIRE(v.size() == 4);
    double mean = 0.0;
    for (double x : v) mean += x / 4.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    CHECK(std::abs(agg.mean - mean) <= 1e-12);
    CHECK(std::abs(agg.sd - std::sqrt(ss / 3.0)) <= 1e-12);
  }
  const std::string csv = to_csv(r);
  const auto header = csv_row(csv, "seed");
  const auto mean_row = csv_row(csv, "mean");
  REQUIRE(header.size() == 3);
  REQUIRE(mean_row.size() == 3);
  for (std::size_t k = 1; k < header.size(); ++k)
    CHECK(std::stod(mean_row[k]) == r.aggregates.at(header[k]).mean);
}

TEST_CASE("stage errors are recorded per seed") {
  ExperimentConfig c = minimal();
  c.seeds = {0, 1};
  c.dataset.count = 500;  // too few pairs for PCL
  c.estimator.kind = "pcl";
  c.estimator.network = nlohmann::json::object();
  const ResultRecord r = run_experiment(c);
  CHECK(r.failures() == 2);
  CHECK(r.seeds[0].error.find("2000") != std::string::npos);
  CHECK(r.aggregates.empty());
  CHECK(to_json(r)["seeds"][1].contains("error"));
}

TEST_CASE("VAE runs report collapse diagnostics") {
  ExperimentConfig c = kappa_slowvae();
  c.seeds = {0};
  c.dataset.count = 2000;
  c.estimator.train.steps = 50;
  c.metrics = {MetricSpec{"mcc"}, MetricSpec{"factorvae", 200}, MetricSpec{"betavae", 500}};
  const ResultRecord r = run_experiment(c);
  REQUIRE(r.seeds[0].ok);
  CHECK(r.seeds[0].diagnostics.count("mean_sigma_1") == 1);
  CHECK(r.seeds[0].diagnostics.count("collapsed_latents") == 1);
  CHECK(r.seeds[0].metrics.count("factorvae") == 1);
  CHECK(r.seeds[0].metrics.count("betavae") == 1);
}

TEST_CASE("tracks dataset runs the statistics pipeline") {
  const fs::path dir = scratch("tracks");
  fs::create_directories(dir);
  Rng rng(1);
  natstats::TrackFixtureConfig fc;
  fc.tracks = 300;
  {
    std::ofstream out(dir / "tracks.csv");
    natstats::write_tracks_csv(out, natstats::synthetic_tracks(fc, rng));
  }
  ExperimentConfig c;
  c.name = "tracks";
  c.dataset.source = "tracks";
  c.dataset.tracks_path = (dir / "tracks.csv").string();
  c.validate();
  const ResultRecord r = run_experiment(c);
  REQUIRE(r.seeds.size() == 1);
  REQUIRE(r.seeds[0].ok);
  CHECK(r.seeds[0].diagnostics.at("rows") == 300 * 49);
  for (const char* col : {"alpha_dx", "alpha_dy", "alpha_darea"}) {
    CHECK(r.seeds[0].metrics.at(col) > 0.4);
    CHECK(r.seeds[0].metrics.at(col) < 0.6);
  }
  const std::vector<double> gaps = {1, 2};
  const SweepTable t = run_sweep("gaps", {c}, {"stats"}, "max_frame_gap", gaps, "alpha_dx", 1);
  CHECK(t.rows[1].records[0].seeds[0].diagnostics.at("rows") == 300 * (48 * 2 + 1));
  fs::remove_all(dir);
}

TEST_CASE("two-estimator sweep writes matching JSON and CSV") {
  ExperimentConfig flow = minimal();
  flow.seeds = {0, 1};
  flow.estimator.train.steps = 200;
  ExperimentConfig slow = flow;
  slow.name = "flow-slow";
  slow.estimator.train.adam.lr = 1e-3;
  const std::vector<double> alphas = {1.0, 2.0};
  const SweepTable t = run_sweep("demo", {flow, slow}, {"fast", "slow"}, "alpha", alphas, "mcc", 2);
  REQUIRE(t.rows.size() == 2);
  REQUIRE(t.rows[0].comparison.has_value());
  CHECK(t.rows[0].records[0].config["dataset"]["alpha"] == 1.0);
  CHECK(t.rows[1].records[1].config["dataset"]["alpha"] == 2.0);
  const fs::path dir = scratch("sweep");
  const auto paths = write_sweep(t, dir.string());
  std::ifstream jin(paths[0]);
  const nlohmann::json j = nlohmann::json::parse(jin);
  std::ifstream cin(paths[1]);
  std::string line;
  std::getline(cin, line);
  CHECK(line == "alpha,estimator,metric,mean,sd,n,failures,p_value");
  int rows = 0;
  while (std::getline(cin, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    const std::size_t r = std::stod(cells[0]) == 1.0 ? 0 : 1;
    const std::size_t e = cells[1] == "fast" ? 0 : 1;
    CHECK(std::stod(cells[3]) == j["rows"][r]["records"][e]["aggregates"][cells[2]]["mean"].get<double>());
    CHECK(std::stod(cells[3]) == t.mean(r, e));
    if (e == 0) CHECK(std::stod(cells[7]) == t.rows[r].comparison->p_value);
    ++rows;
  }
  CHECK(rows == 4);
  fs::remove_all(dir);
}

TEST_CASE("changing-factor histograms") {
  const synth::FactorGrid grid{{3, 6, 40, 32, 32}, {}};
  const LapHistogram h = lap_histogram(grid, 1.0, 20000, 5);
  REQUIRE(h.lap.size() == 6);
  CHECK(h.lap[0] == 0);
  std::size_t total = 0, multi = 0;
  for (std::size_t k = 0; k < h.lap.size(); ++k) {
    total += h.lap[k];
    if (k >= 2) multi += h.lap[k];
  }
  CHECK(total == 20000);
  CHECK(multi > 10000);
  CHECK(h.uni[0] == 0);
  CHECK(h.uni[5] == 0);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(h.uni[k] / 20000.0 - 0.25) <= 0.02);
  CHECK(to_csv(h).rfind("changed_factors,lap,uni\n0,0,0\n", 0) == 0);
  CHECK(to_json(h)["lap"].size() == 6);
}
