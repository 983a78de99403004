#include "slowlab/natstats/report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace slowlab::natstats {
namespace {

const std::vector<std::string>& param_names(dists::Family f) {
  static const std::vector<std::string> genlap = {"alpha", "loc", "scale"};
  static const std::vector<std::string> gauss = {"mu", "sigma"};
  static const std::vector<std::string> lap = {"loc", "scale"};
  switch (f) {
    case dists::Family::kGenLaplace: return genlap;
    case dists::Family::kGaussian: return gauss;
    default: return lap;
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

Matrix abs_pearson(const Matrix& m) {
  const Matrix a = m.cwiseAbs();
  const Matrix c = a.rowwise() - a.colwise().mean();
  const Matrix cov = c.transpose() * c;
  const Vector sd = cov.diagonal().cwiseSqrt();
  Matrix out(m.cols(), m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(i, j) = sd[i] > 0.0 && sd[j] > 0.0 ? cov(i, j) / (sd[i] * sd[j]) : 0.0;
  return out;
}

int bin_of(double v) {
  if (!(v >= -kHistogramLimit && v <= kHistogramLimit)) return -1;
  const int b = static_cast<int>((v + kHistogramLimit) / (2.0 * kHistogramLimit) * kHistogramBins);
  return std::min(b, kHistogramBins - 1);
}

IndexMatrix histogram2d(const Matrix& v, int a, int b) {
  IndexMatrix h = IndexMatrix::Zero(kHistogramBins, kHistogramBins);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const int i = bin_of(v(r, a)), j = bin_of(v(r, b));
    if (i >= 0 && j >= 0) ++h(i, j);
  }
  return h;
}

nlohmann::json counts_json(const IndexMatrix& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    std::vector<int> row(h.cols());
    for (Eigen::Index j = 0; j < h.cols(); ++j) row[j] = h(i, j);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

StatsReport stats_report(const TransitionTable& table, const StatsOptions& options) {
  require(table.rows() >= 100, "stats_report: need at least 100 transitions");
  StatsReport r;
  r.rows = static_cast<std::size_t>(table.rows());
  r.max_frame_gap = table.max_frame_gap;
  r.mean_dt = table.mean_dt();
  r.normalized = table.is_normalized();
  r.clip_counts = table.clip_counts;
  if (options.drop_zeros) r.notes.push_back("exact-zero changes are counted separately and left out of the fits");
  if (r.normalized)
    r.notes.push_back("columns scaled to unit standard deviation over the pooled table, then clipped to +-5");
  const Matrix& v = table.values();
  for (int c = 0; c < kNumColumns; ++c) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(v.rows()));
    ColumnStats s;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (options.drop_zeros && v(r, c) == 0.0) ++s.zeros;
      else col.push_back(v(r, c));
    }
    s.name = kColumnNames[c];
    s.count = col.size();
    require(col.size() >= 100, "stats_report: fewer than 100 non-zero values in column " + s.name);
    s.fits = dists::fit_all_families(col);
    s.kurtosis = s.fits[0].kurtosis;
    r.columns.push_back(std::move(s));
  }
  return r;
}

nlohmann::json to_json(const StatsReport& report) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    const ColumnStats& s = report.columns[c];
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : s.fits) {
      nlohmann::json params = nlohmann::json::object();
      const auto& names = param_names(f.family);
      for (std::size_t k = 0; k < f.params.size(); ++k) params[names[k]] = f.params[k];
      fits.push_back({{"family", dists::family_name(f.family)}, {"params", params}, {"loglik", f.loglik}});
    }
    cols.push_back({{"name", s.name},
                    {"count", s.count},
                    {"zeros", s.zeros},
                    {"kurtosis", s.kurtosis},
                    {"clipped", report.clip_counts[c]},
                    {"fits", fits}});
  }
  return {{"rows", report.rows},    {"max_frame_gap", report.max_frame_gap}, {"mean_dt", report.mean_dt},
          {"normalized", report.normalized}, {"notes", report.notes},       {"columns", cols}};
}

std::string to_text(const StatsReport& report) {
  std::ostringstream out;
  out << "# transitions " << report.rows << ", max frame gap " << report.max_frame_gap << ", mean dt "
      << fmt("%.4f", report.mean_dt) << " s\n";
  for (const auto& n : report.notes) out << "# " << n << '\n';
  out << "\nKurtosis\n" << pad("column", 10) << pad("kurtosis", 14) << pad("count", 10) << pad("zeros", 10)
      << "clipped\n";
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    const ColumnStats& s = report.columns[c];
    out << pad(s.name, 10) << pad(fmt("%.4f", s.kurtosis), 14) << pad(std::to_string(s.count), 10)
        << pad(std::to_string(s.zeros), 10) << report.clip_counts[c] << '\n';
  }
  out << "\nParameter fits\n"
      << pad("column", 10) << pad("family", 14) << pad("parameters", 48) << "loglik\n";
  for (const ColumnStats& s : report.columns) {
    for (const auto& f : s.fits) {
      std::string params;
      const auto& names = param_names(f.family);
      for (std::size_t k = 0; k < f.params.size(); ++k)
        params += (k ? " " : "") + names[k] + "=" + fmt("%.4g", f.params[k]);
      out << pad(s.name, 10) << pad(dists::family_name(f.family), 14) << pad(params, 48)
          << fmt("%.3f", f.loglik) << '\n';
    }
  }
  return out.str();
}

DependenceDiagnostic dependence_diagnostic(const TransitionTable& table, Rng& rng) {
  require(table.rows() >= 2, "dependence_diagnostic: need at least two transitions");
  const Matrix& v = table.values();
  Matrix shuffled = v;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index r = 0; r < v.rows(); ++r) shuffled(r, c) = v(perm[r], c);
  }
  DependenceDiagnostic d;
  for (int a = 0; a < kNumColumns; ++a)
    for (int b = a + 1; b < kNumColumns; ++b)
      d.histograms.push_back({a, b, histogram2d(v, a, b), histogram2d(shuffled, a, b)});
  d.abs_correlation = abs_pearson(v);
  d.abs_correlation_shuffled = abs_pearson(shuffled);
  d.shuffled = std::move(shuffled);
  return d;
}

nlohmann::json to_json(const DependenceDiagnostic& diag) {
  nlohmann::json hists = nlohmann::json::array();
  for (const auto& h : diag.histograms)
    hists.push_back({{"x", kColumnNames[h.first]},
                     {"y", kColumnNames[h.second]},
                     {"paired", counts_json(h.paired)},
                     {"shuffled", counts_json(h.shuffled)}});
  return {{"bins", kHistogramBins},
          {"range", {-kHistogramLimit, kHistogramLimit}},
          {"histograms", hists},
          {"abs_correlation", matrix_json(diag.abs_correlation)},
          {"abs_correlation_shuffled", matrix_json(diag.abs_correlation_shuffled)}};
}

}  // namespace slowlab::natstats
