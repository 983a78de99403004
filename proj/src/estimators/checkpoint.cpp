#include "slowlab/estimators/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace slowlab::est {
namespace {

constexpr char kMagic[4] = {'S', 'L', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint: truncated tensor archive");
  return v;
}

}  // namespace

void write_tensors(std::ostream& out, const grad::ParamStore& store) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, store.params().size());
  for (const auto& p : store.params()) {
    put<std::uint64_t>(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) put<double>(out, p.value(i, j));
  }
  if (!out) throw Error("checkpoint: write failed");
}

void read_tensors(std::istream& in, grad::ParamStore& store) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw Error("checkpoint: bad tensor archive magic");
  if (get<std::uint32_t>(in) != kVersion) throw Error("checkpoint: unsupported archive version");
  const auto count = get<std::uint64_t>(in);
  if (count != store.params().size()) throw Error("checkpoint: tensor count does not match the model");
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw Error("checkpoint: tensor name too long");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (!in || !store.contains(name)) throw Error("checkpoint: unknown tensor '" + name + "'");
    grad::Param& p = store.get(name);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(p.value.rows()) || cols != static_cast<std::uint64_t>(p.value.cols()))
      throw Error("checkpoint: shape mismatch for '" + name + "'");
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = get<double>(in);
  }
}

void save_checkpoint(const std::string& prefix, const grad::ParamStore& store,
                     const CheckpointManifest& manifest) {
  std::ofstream tensors(prefix + ".tensors", std::ios::binary);
  if (!tensors) throw Error("checkpoint: cannot open " + prefix + ".tensors");
  write_tensors(tensors, store);
  std::ofstream json(prefix + ".json");
  if (!json) throw Error("checkpoint: cannot open " + prefix + ".json");
  json << nlohmann::json{{"kind", manifest.kind},
                         {"config", manifest.config},
                         {"seed", manifest.seed},
                         {"step", manifest.step}}
              .dump(2)
       << "\n";
}

CheckpointManifest read_manifest(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw Error("checkpoint: cannot open " + prefix + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  CheckpointManifest m;
  m.kind = j.at("kind").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.step = j.at("step").get<std::int64_t>();
  return m;
}

void load_tensors(const std::string& prefix, grad::ParamStore& store) {
  std::ifstream in(prefix + ".tensors", std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + prefix + ".tensors");
  read_tensors(in, store);
}

}  // namespace slowlab::est
