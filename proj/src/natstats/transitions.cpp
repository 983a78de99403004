#include "slowlab/natstats/transitions.hpp"

#include <cmath>

namespace slowlab::natstats {

double TransitionTable::mean_dt() const {
  if (dt.empty()) return 0.0;
  double s = 0.0;
  for (double v : dt) s += v;
  return s / static_cast<double>(dt.size());
}

TransitionTable compute_transitions(const std::vector<MaskTrack>& tracks, int max_frame_gap) {
  require(max_frame_gap >= 1, "compute_transitions: max_frame_gap must be >= 1");
  std::vector<std::array<double, kNumColumns>> rows;
  TransitionTable table;
  table.max_frame_gap = max_frame_gap;
  for (const MaskTrack& t : tracks) {
    const auto& s = t.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        const std::int64_t gap = s[j].frame - s[i].frame;
        require(gap > 0, "compute_transitions: frames not strictly increasing in track " + t.id());
        if (gap > max_frame_gap) break;
        rows.push_back({s[j].cx - s[i].cx, s[j].cy - s[i].cy, s[j].area - s[i].area});
        table.track_ids.push_back(t.id());
        table.frame_gaps.push_back(static_cast<int>(gap));
        table.dt.push_back(s[j].time_s - s[i].time_s);
      }
    }
  }
  table.raw.resize(static_cast<Eigen::Index>(rows.size()), kNumColumns);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < kNumColumns; ++c) table.raw(static_cast<Eigen::Index>(r), c) = rows[r][c];
  return table;
}

ClipResult normalize_clip(const Matrix& columns, double limit) {
  require(columns.rows() >= 2, "normalize_clip: need at least two rows");
  require(limit > 0.0, "normalize_clip: limit must be positive");
  require(columns.cols() == kNumColumns, "normalize_clip: expected dx, dy, darea columns");
  ClipResult out;
  out.values = columns;
  for (Eigen::Index c = 0; c < kNumColumns; ++c) {
    const auto col = columns.col(c).array();
    const double sd = std::sqrt((col - col.mean()).square().mean());
    require(sd > 0.0 && std::isfinite(sd), "normalize_clip: column " + std::to_string(c) + " has zero spread");
    out.scales[c] = sd;
    for (Eigen::Index r = 0; r < columns.rows(); ++r) {
      double v = columns(r, c) / sd;
      if (std::abs(v) > limit) {
        v = std::copysign(limit, v);
        ++out.clip_counts[c];
      }
      out.values(r, c) = v;
    }
  }
  return out;
}

TransitionTable normalize_clip(TransitionTable table, double limit) {
  ClipResult r = normalize_clip(table.raw, limit);
  table.normalized = std::move(r.values);
  table.scales = r.scales;
  table.clip_counts = r.clip_counts;
  return table;
}

}  // namespace slowlab::natstats
