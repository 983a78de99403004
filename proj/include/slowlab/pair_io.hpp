#ifndef SLOWLAB_PAIR_IO_HPP_
#define SLOWLAB_PAIR_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "slowlab/synthgen.hpp"

namespace slowlab::synth {

// CSV: header prev_0..prev_{D-1},next_0..next_{D-1}; one pair per line,
// values printed with 17 significant digits.
void write_pairs_csv(std::ostream& out, const PairBatch& batch);
PairBatch read_pairs_csv(std::istream& in);

// Binary "TSPB" layout, little-endian:
//   char[4] "TSPB" | u32 version (=1) | u64 count | u64 dim |
//   f64 prev[count*dim] row-major | f64 next[count*dim] row-major
inline constexpr std::uint32_t kPairBinaryVersion = 1;
void write_pairs_binary(std::ostream& out, const PairBatch& batch);
PairBatch read_pairs_binary(std::istream& in);

// Format chosen from the extension: ".csv" -> CSV, anything else -> TSPB.
void save_pairs(const std::string& path, const PairBatch& batch);
PairBatch load_pairs(const std::string& path);

// Plain numeric matrix CSV with a header row (used for latents / factors).
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& prefix);
Matrix read_matrix_csv(std::istream& in);

}  // namespace slowlab::synth

#endif  // SLOWLAB_PAIR_IO_HPP_
