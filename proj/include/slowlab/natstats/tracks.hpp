#ifndef SLOWLAB_NATSTATS_TRACKS_HPP_
#define SLOWLAB_NATSTATS_TRACKS_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slowlab/common.hpp"

namespace slowlab::natstats {

struct TrackSample {
  std::int64_t frame = 0;
  double time_s = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double area = 0.0;  // pixels^2, > 0
};

struct MaskTrack {
  std::string sequence_id;
  std::string object_id;
  std::vector<TrackSample> samples;  // strictly increasing frame

  std::string id() const { return sequence_id + "/" + object_id; }
};

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct TrackSet {
  std::vector<MaskTrack> tracks;  // ordered by (sequence_id, object_id)
  std::vector<RowError> errors;   // offending rows are dropped
  std::size_t rows_read = 0;
};

inline const std::vector<std::string> kTrackColumns = {"sequence_id", "object_id", "frame", "time_s",
                                                      "cx", "cy", "area"};

// Columns may appear in any order; extra columns are ignored. A missing
// column throws InvalidArgument. Rows with bad fields, area <= 0 or a frame
// already seen in their track are collected in `errors`.
TrackSet read_tracks_csv(std::istream& in);
// Throws Error when the file cannot be opened.
TrackSet load_tracks(const std::string& path);
void write_tracks_csv(std::ostream& out, const std::vector<MaskTrack>& tracks);

// Synthetic tracks whose per-frame increments are i.i.d. generalized
// Laplace draws; x additionally drifts by `velocity` pixels per frame.
struct TrackFixtureConfig {
  int tracks = 1000;
  int frames_per_track = 50;
  int sequences = 10;
  double alpha = 0.5;
  double scale_xy = 2.0;     // 1 / rate of the position increments
  double scale_area = 20.0;  // 1 / rate of the area increments
  double velocity = 0.0;
  double base_area = 1e6;
  double fps = 30.0;
};

std::vector<MaskTrack> synthetic_tracks(const TrackFixtureConfig& config, Rng& rng);

}  // namespace slowlab::natstats

#endif  // SLOWLAB_NATSTATS_TRACKS_HPP_
