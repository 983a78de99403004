#ifndef SLOWLAB_NATSTATS_REPORT_HPP_
#define SLOWLAB_NATSTATS_REPORT_HPP_

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "slowlab/dists.hpp"
#include "slowlab/natstats/transitions.hpp"

namespace slowlab::natstats {

struct ColumnStats {
  std::string name;
  std::size_t count = 0;  // values fitted
  std::size_t zeros = 0;  // exact zeros left out of the fit
  double kurtosis = 0.0;
  std::array<dists::FitReportEntry, 3> fits;  // generalized Laplace, Gaussian, Laplace

  double genlap_alpha() const { return fits[0].params[0]; }
};

struct StatsReport {
  std::vector<ColumnStats> columns;
  std::size_t rows = 0;
  int max_frame_gap = 1;
  double mean_dt = 0.0;
  bool normalized = false;
  std::array<std::size_t, kNumColumns> clip_counts{};
  std::vector<std::string> notes;
};

struct StatsOptions {
  // Exact-zero changes (a mask that did not move or grow) form a point mass
  // that makes the continuous likelihood unbounded as alpha -> 0. When set,
  // each column is fitted on its non-zero values and the zero count is
  // reported alongside.
  bool drop_zeros = true;
};

// Fits the three families to every column of table.values().
StatsReport stats_report(const TransitionTable& table, const StatsOptions& options = {});
nlohmann::json to_json(const StatsReport& report);
// Kurtosis table followed by a per-family parameter / log-likelihood table.
std::string to_text(const StatsReport& report);

inline constexpr int kHistogramBins = 50;
inline constexpr double kHistogramLimit = 5.0;

struct PairHistogram {
  int first = 0;
  int second = 1;
  IndexMatrix paired;    // bins x bins, rows index the first column
  IndexMatrix shuffled;
};

struct DependenceDiagnostic {
  std::vector<PairHistogram> histograms;  // every column pair
  Matrix abs_correlation;                 // Pearson of |delta|, paired rows
  Matrix abs_correlation_shuffled;        // after shuffling each column independently
  Matrix shuffled;                        // the shuffled table.values()
};

DependenceDiagnostic dependence_diagnostic(const TransitionTable& table, Rng& rng);
nlohmann::json to_json(const DependenceDiagnostic& diag);

}  // namespace slowlab::natstats

#endif  // SLOWLAB_NATSTATS_REPORT_HPP_
