#ifndef SLOWLAB_NATSTATS_TRANSITIONS_HPP_
#define SLOWLAB_NATSTATS_TRANSITIONS_HPP_

#include <array>
#include <string>
#include <vector>

#include "slowlab/natstats/tracks.hpp"

namespace slowlab::natstats {

inline constexpr int kNumColumns = 3;
inline const std::array<std::string, kNumColumns> kColumnNames = {"dx", "dy", "darea"};
inline constexpr double kClipLimit = 5.0;

struct TransitionTable {
  Matrix raw;         // N x 3: dx, dy, darea
  Matrix normalized;  // filled by normalize_clip, otherwise empty
  std::vector<std::string> track_ids;
  std::vector<int> frame_gaps;
  std::vector<double> dt;
  int max_frame_gap = 1;
  std::array<double, kNumColumns> scales{};               // divisor applied per column
  std::array<std::size_t, kNumColumns> clip_counts{};

  Eigen::Index rows() const { return raw.rows(); }
  bool is_normalized() const { return normalized.rows() == raw.rows() && raw.rows() > 0; }
  double mean_dt() const;
  // normalized when available, raw otherwise
  const Matrix& values() const { return is_normalized() ? normalized : raw; }
};

// Every ordered pair (i < j) of samples of one track with
// frame_j - frame_i <= max_frame_gap gives one row.
TransitionTable compute_transitions(const std::vector<MaskTrack>& tracks, int max_frame_gap = 1);

struct ClipResult {
  Matrix values;
  std::array<double, kNumColumns> scales{};
  std::array<std::size_t, kNumColumns> clip_counts{};
};

// Divides each column by its standard deviation (ddof 0) over the pooled
// rows, then clips to [-limit, limit].
ClipResult normalize_clip(const Matrix& columns, double limit = kClipLimit);
TransitionTable normalize_clip(TransitionTable table, double limit = kClipLimit);

}  // namespace slowlab::natstats

#endif  // SLOWLAB_NATSTATS_TRANSITIONS_HPP_
