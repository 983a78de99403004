#ifndef SLOWLAB_ESTIMATORS_CHECKPOINT_HPP_
#define SLOWLAB_ESTIMATORS_CHECKPOINT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "slowlab/gradcore/tape.hpp"

namespace slowlab::est {

struct CheckpointManifest {
  std::string kind;  // "slowflow", "slowvae", "pmvae" or "pcl"
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

// Archive layout: "SLNT", u32 version, u64 count, then per tensor
// u64 name length, name bytes, u64 rows, u64 cols, row-major f64 data.
void write_tensors(std::ostream& out, const grad::ParamStore& store);
// Overwrites values of existing parameters; names and shapes must match.
void read_tensors(std::istream& in, grad::ParamStore& store);

// Writes <prefix>.json (manifest) and <prefix>.tensors.
void save_checkpoint(const std::string& prefix, const grad::ParamStore& store,
                     const CheckpointManifest& manifest);
CheckpointManifest read_manifest(const std::string& prefix);
void load_tensors(const std::string& prefix, grad::ParamStore& store);

}  // namespace slowlab::est

#endif  // SLOWLAB_ESTIMATORS_CHECKPOINT_HPP_
