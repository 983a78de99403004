#include "slowlab/natstats/tracks.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "slowlab/dists.hpp"

namespace slowlab::natstats {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

template <typename T>
bool parse(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

TrackSet read_tracks_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("tracks csv: empty input");
  const std::vector<std::string> header = split(line);
  std::array<std::size_t, 7> col{};
  for (std::size_t k = 0; k < kTrackColumns.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), kTrackColumns[k]);
    if (it == header.end()) throw InvalidArgument("tracks csv: missing column '" + kTrackColumns[k] + "'");
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  TrackSet set;
  std::map<std::pair<std::string, std::string>, std::map<std::int64_t, TrackSample>> grouped;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++set.rows_read;
    const std::vector<std::string> f = split(line);
    if (f.size() < header.size()) {
      set.errors.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(f.size())});
      continue;
    }
    TrackSample s;
    if (!parse(f[col[2]], s.frame) || !parse(f[col[3]], s.time_s) || !parse(f[col[4]], s.cx) ||
        !parse(f[col[5]], s.cy) || !parse(f[col[6]], s.area)) {
      set.errors.push_back({line_no, "unparseable numeric field"});
      continue;
    }
    if (!std::isfinite(s.time_s) || !std::isfinite(s.cx) || !std::isfinite(s.cy) || !std::isfinite(s.area)) {
      set.errors.push_back({line_no, "non-finite value"});
      continue;
    }
    if (s.area <= 0.0) {
      set.errors.push_back({line_no, "area must be positive"});
      continue;
    }
    auto& track = grouped[{f[col[0]], f[col[1]]}];
    if (!track.emplace(s.frame, s).second) {
      set.errors.push_back({line_no, "duplicate frame " + std::to_string(s.frame) + " in track " +
                                         f[col[0]] + "/" + f[col[1]]});
    }
  }
  for (auto& [key, samples] : grouped) {
    MaskTrack t{key.first, key.second, {}};
    t.samples.reserve(samples.size());
    for (auto& [frame, s] : samples) t.samples.push_back(s);
    set.tracks.push_back(std::move(t));
  }
  return set;
}

TrackSet load_tracks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tracks file: " + path);
  return read_tracks_csv(in);
}

void write_tracks_csv(std::ostream& out, const std::vector<MaskTrack>& tracks) {
  for (std::size_t k = 0; k < kTrackColumns.size(); ++k) out << (k ? "," : "") << kTrackColumns[k];
  out << '\n';
  out.precision(17);
  for (const auto& t : tracks)
    for (const auto& s : t.samples)
      out << t.sequence_id << ',' << t.object_id << ',' << s.frame << ',' << s.time_s << ',' << s.cx << ','
          << s.cy << ',' << s.area << '\n';
}

std::vector<MaskTrack> synthetic_tracks(const TrackFixtureConfig& config, Rng& rng) {
  require(config.tracks > 0 && config.frames_per_track > 0 && config.sequences > 0,
          "synthetic_tracks: counts must be positive");
  require(config.fps > 0.0 && config.base_area > 0.0, "synthetic_tracks: fps and base_area must be positive");
  const dists::GenLaplaceParams pos{config.alpha, 1.0 / config.scale_xy, 0.0};
  const dists::GenLaplaceParams area{config.alpha, 1.0 / config.scale_area, 0.0};
  pos.validate();
  area.validate();
  std::uniform_real_distribution<double> start(0.0, 1000.0);
  std::vector<MaskTrack> tracks;
  tracks.reserve(config.tracks);
  for (int i = 0; i < config.tracks; ++i) {
    MaskTrack t{"seq" + std::to_string(i % config.sequences), "obj" + std::to_string(i), {}};
    TrackSample s{0, 0.0, start(rng), start(rng), config.base_area};
    t.samples.push_back(s);
    for (int f = 1; f < config.frames_per_track; ++f) {
      s.frame = f;
      s.time_s = f / config.fps;
      s.cx += config.velocity + dists::genlap_draw(pos, rng);
      s.cy += dists::genlap_draw(pos, rng);
      s.area += dists::genlap_draw(area, rng);
      if (s.area <= 0.0) throw InvalidArgument("synthetic_tracks: area walk reached zero; raise base_area");
      t.samples.push_back(s);
    }
    tracks.push_back(std::move(t));
  }
  std::sort(tracks.begin(), tracks.end(), [](const MaskTrack& a, const MaskTrack& b) {
    return std::tie(a.sequence_id, a.object_id) < std::tie(b.sequence_id, b.object_id);
  });
  return tracks;
}

}  // namespace slowlab::natstats
