#include "slowlab/harness/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "slowlab/harness/stats.hpp"

namespace slowlab::harness {
namespace {

using nlohmann::json;

const std::set<std::string> kMixingKinds = {"identity", "orthogonal", "slrelu", "expanding", "diagonal"};
const std::set<std::string> kSources = {"pairs", "ar", "tracks"};
const std::set<std::string> kEstimators = {"slowflow", "slowvae", "pmvae", "pcl"};
const std::set<std::string> kMetrics = {"mcc", "mig", "sap", "modularity", "factorvae", "betavae"};
const std::set<std::string> kAxes = {"kappa", "layers", "alpha",         "lambda",
                                     "out_dim", "dim", "max_frame_gap", "gamma"};

// Walks the keys of one object, converting every type error into a
// ConfigError that names the full key path.
template <typename Handler>
void read_object(const json& j, const std::string& path, Handler&& handle) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    bool known = false;
    try {
      known = handle(key, value, full);
    } catch (const json::exception& e) {
      throw ConfigError(full + ": " + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(full + ": " + e.what());
    }
    if (!known) throw ConfigError("unknown config key '" + full + "'");
  }
}

MixingSpec mixing_from_json(const json& j, const std::string& path) {
  MixingSpec m;
  read_object(j, path, [&](const std::string& k, const json& v, const std::string&) {
    if (k == "kind") m.kind = v.get<std::string>();
    else if (k == "layers") m.layers = v.get<int>();
    else if (k == "slope") m.slope = v.get<double>();
    else if (k == "out_dim") m.out_dim = v.get<int>();
    else if (k == "kappa") m.kappa = v.get<double>();
    else return false;
    return true;
  });
  return m;
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec d;
  read_object(j, "dataset", [&](const std::string& k, const json& v, const std::string& full) {
    if (k == "source") d.source = v.get<std::string>();
    else if (k == "dim") d.dim = v.get<int>();
    else if (k == "alpha") d.alpha = v.get<double>();
    else if (k == "lambda") d.lambda = v.get<double>();
    else if (k == "count") d.count = v.get<std::size_t>();
    else if (k == "eval_count") d.eval_count = v.get<std::size_t>();
    else if (k == "mixing") d.mixing = mixing_from_json(v, full);
    else if (k == "shuffle_per_factor") d.shuffle_per_factor = v.get<bool>();
    else if (k == "tracks_path") d.tracks_path = v.get<std::string>();
    else if (k == "max_frame_gap") d.max_frame_gap = v.get<int>();
    else if (k == "normalize") d.normalize = v.get<bool>();
    else return false;
    return true;
  });
  return d;
}

EstimatorSpec estimator_from_json(const json& j) {
  EstimatorSpec e;
  read_object(j, "estimator", [&](const std::string& k, const json& v, const std::string& full) {
    if (k == "kind") e.kind = v.get<std::string>();
    else if (k == "gamma") e.gamma = v.get<double>();
    else if (k == "lambda") e.lambda = v.get<double>();
    else if (k == "bidirectional") e.bidirectional = v.get<bool>();
    else if (k == "latent_dim") e.latent_dim = v.get<int>();
    else if (k == "network") {
      if (!v.is_object()) throw ConfigError(full + ": expected an object");
      e.network = v;
    } else if (k == "train") {
      e.train = est::train_config_from_json(v);
    } else {
      return false;
    }
    return true;
  });
  return e;
}

MetricSpec metric_from_json(const json& j, const std::string& path) {
  if (j.is_string()) return MetricSpec{j.get<std::string>()};
  MetricSpec m;
  read_object(j, path, [&](const std::string& k, const json& v, const std::string&) {
    if (k == "name") m.name = v.get<std::string>();
    else if (k == "samples") m.samples = v.get<std::size_t>();
    else if (k == "correlation") m.correlation = v.get<std::string>();
    else return false;
    return true;
  });
  return m;
}

SweepSpec sweep_from_json(const json& j) {
  SweepSpec s;
  read_object(j, "sweep", [&](const std::string& k, const json& v, const std::string&) {
    if (k == "axis") s.axis = v.get<std::string>();
    else if (k == "values") s.values = v.get<std::vector<double>>();
    else return false;
    return true;
  });
  return s;
}

void check(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace

void ExperimentConfig::validate() const {
  check(!name.empty(), "name must not be empty");
  check(!seeds.empty(), "seeds must not be empty");
  check(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "seeds must be distinct");
  check(kSources.count(dataset.source) > 0, "dataset.source: unknown value '" + dataset.source + "'");
  check(threads >= 0, "threads must be >= 0");
  if (dataset.source == "tracks") {
    check(!dataset.tracks_path.empty(), "dataset.tracks_path is required for the tracks source");
    check(dataset.max_frame_gap >= 1, "dataset.max_frame_gap must be >= 1");
  } else {
    check(dataset.dim >= 1, "dataset.dim must be >= 1");
    check(dataset.alpha > 0.0, "dataset.alpha must be positive");
    check(dataset.lambda > 0.0, "dataset.lambda must be positive");
    check(dataset.count >= 2, "dataset.count must be >= 2");
    const MixingSpec& m = dataset.mixing;
    check(kMixingKinds.count(m.kind) > 0, "dataset.mixing.kind: unknown value '" + m.kind + "'");
    if (m.kind == "slrelu") check(m.layers >= 1, "dataset.mixing.layers must be >= 1");
    if (m.kind == "expanding") check(m.out_dim >= dataset.dim, "dataset.mixing.out_dim must be >= dataset.dim");
    if (m.kind == "diagonal") check(m.kappa > 0.0, "dataset.mixing.kappa must be positive");
    check(m.effective_slope() > 0.0 && m.effective_slope() <= 1.0, "dataset.mixing.slope must be in (0, 1]");
    check(kEstimators.count(estimator.kind) > 0, "estimator.kind: unknown value '" + estimator.kind + "'");
    check(estimator.gamma > 0.0, "estimator.gamma must be positive");
    check(estimator.lambda > 0.0, "estimator.lambda must be positive");
    check(estimator.latent_dim >= 0, "estimator.latent_dim must be >= 0");
    if (estimator.kind == "slowflow" || estimator.kind == "pcl")
      check(m.kind != "expanding" || m.out_dim == dataset.dim,
            "estimator." + estimator.kind + " needs observations of the source dimension");
    for (const MetricSpec& metric : metrics) {
      check(kMetrics.count(metric.name) > 0, "metrics: unknown metric '" + metric.name + "'");
      check(metric.correlation == "spearman" || metric.correlation == "pearson",
            "metrics: correlation must be spearman or pearson");
    }
    if (estimator.kind == "slowflow") flow_config(*this);
    else if (estimator.kind == "pcl") pcl_config(*this);
    else vae_config(*this);
    try {
      estimator.train.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("estimator.train: ") + e.what());
    }
  }
  if (sweep) {
    check(kAxes.count(sweep->axis) > 0, "sweep.axis: unknown value '" + sweep->axis + "'");
    check(!sweep->values.empty(), "sweep.values must not be empty");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  read_object(j, "", [&](const std::string& k, const json& v, const std::string&) {
    if (k == "name") c.name = v.get<std::string>();
    else if (k == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
    else if (k == "dataset") c.dataset = dataset_from_json(v);
    else if (k == "estimator") c.estimator = estimator_from_json(v);
    else if (k == "metrics") {
      c.metrics.clear();
      for (std::size_t i = 0; i < v.size(); ++i) c.metrics.push_back(metric_from_json(v.at(i), "metrics[" + std::to_string(i) + "]"));
    } else if (k == "sweep") c.sweep = sweep_from_json(v);
    else if (k == "output_dir") c.output_dir = v.get<std::string>();
    else if (k == "threads") c.threads = v.get<int>();
    else if (k == "save_checkpoints") c.save_checkpoints = v.get<bool>();
    else if (k == "save_latents") c.save_latents = v.get<bool>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  const MixingSpec& m = c.dataset.mixing;
  json mixing = {{"kind", m.kind}, {"layers", m.layers}, {"out_dim", m.out_dim}, {"kappa", m.kappa}};
  if (m.slope) mixing["slope"] = *m.slope;
  json metrics = json::array();
  for (const auto& metric : c.metrics)
    metrics.push_back({{"name", metric.name}, {"samples", metric.samples}, {"correlation", metric.correlation}});
  json j = {
      {"name", c.name},
      {"seeds", c.seeds},
      {"dataset",
       {{"source", c.dataset.source},
        {"dim", c.dataset.dim},
        {"alpha", c.dataset.alpha},
        {"lambda", c.dataset.lambda},
        {"count", c.dataset.count},
        {"eval_count", c.dataset.eval_count},
        {"mixing", mixing},
        {"shuffle_per_factor", c.dataset.shuffle_per_factor},
        {"tracks_path", c.dataset.tracks_path},
        {"max_frame_gap", c.dataset.max_frame_gap},
        {"normalize", c.dataset.normalize}}},
      {"estimator",
       {{"kind", c.estimator.kind},
        {"gamma", c.estimator.gamma},
        {"lambda", c.estimator.lambda},
        {"bidirectional", c.estimator.bidirectional},
        {"latent_dim", c.estimator.latent_dim},
        {"network", c.estimator.network},
        {"train", est::to_json(c.estimator.train)}}},
      {"metrics", metrics},
      {"output_dir", c.output_dir},
      {"threads", c.threads},
      {"save_checkpoints", c.save_checkpoints},
      {"save_latents", c.save_latents}};
  if (c.sweep) j["sweep"] = {{"axis", c.sweep->axis}, {"values", c.sweep->values}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  for (const char* k : {"output_dir", "threads", "save_checkpoints", "save_latents"}) j.erase(k);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

ExperimentConfig apply_axis(const ExperimentConfig& c, const std::string& axis, double value) {
  ExperimentConfig out = c;
  out.sweep.reset();
  const int as_int = static_cast<int>(std::lround(value));
  if (axis == "kappa") out.dataset.mixing.kappa = value;
  else if (axis == "layers") out.dataset.mixing.layers = as_int;
  else if (axis == "alpha") out.dataset.alpha = value;
  else if (axis == "lambda") out.dataset.lambda = out.estimator.lambda = value;
  else if (axis == "out_dim") out.dataset.mixing.out_dim = as_int;
  else if (axis == "dim") out.dataset.dim = as_int;
  else if (axis == "max_frame_gap") out.dataset.max_frame_gap = as_int;
  else if (axis == "gamma") out.estimator.gamma = value;
  else throw ConfigError("unknown sweep axis '" + axis + "'");
  char suffix[64];
  std::snprintf(suffix, sizeof suffix, "-%s%g", axis.c_str(), value);
  out.name += suffix;
  out.validate();
  return out;
}

namespace {

template <typename Reader>
auto network_config(const ExperimentConfig& c, nlohmann::json dims, Reader&& read) {
  for (const auto& [key, value] : c.estimator.network.items()) {
    if (dims.contains(key)) throw ConfigError("estimator.network." + key + ": set by the dataset");
    dims[key] = value;
  }
  try {
    return read(dims);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("estimator.network: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("estimator.network: ") + e.what());
  }
}

}  // namespace

int observation_dim(const DatasetSpec& d) {
  return d.mixing.kind == "expanding" ? d.mixing.out_dim : d.dim;
}

est::FlowConfig flow_config(const ExperimentConfig& c) {
  return network_config(c, {{"dim", c.dataset.dim}}, est::flow_config_from_json);
}

est::VaeConfig vae_config(const ExperimentConfig& c) {
  const int latent = c.estimator.latent_dim > 0 ? c.estimator.latent_dim : c.dataset.dim;
  return network_config(c, {{"x_dim", observation_dim(c.dataset)}, {"latent_dim", latent}},
                        est::vae_config_from_json);
}

est::PclConfig pcl_config(const ExperimentConfig& c) {
  return network_config(c, {{"dim", c.dataset.dim}}, est::pcl_config_from_json);
}

std::string default_output_dir() {
  const char* env = std::getenv("SLOWLAB_OUT");
  return env && *env ? env : "results";
}

}  // namespace slowlab::harness
