#include "slowlab/pair_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace slowlab::synth {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary pair format assumes a little-endian host");

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos)
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidArgument("truncated binary pair file");
  return v;
}

void put_rows(std::ostream& out, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

Matrix get_rows(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!in) throw InvalidArgument("truncated binary pair file");
  return rm;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_pairs_csv(std::ostream& out, const PairBatch& batch) {
  batch.validate();
  const Eigen::Index d = batch.dim();
  for (Eigen::Index j = 0; j < d; ++j) out << "prev_" << j << ",";
  for (Eigen::Index j = 0; j < d; ++j) out << "next_" << j << (j + 1 < d ? "," : "\n");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < batch.count(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << batch.prev(i, j) << ",";
    for (Eigen::Index j = 0; j < d; ++j) out << batch.next(i, j) << (j + 1 < d ? "," : "\n");
  }
}

PairBatch read_pairs_csv(std::istream& in) {
  const Matrix all = read_matrix_csv(in);
  require(all.cols() % 2 == 0 && all.cols() > 0, "pair CSV needs an even number of columns");
  const Eigen::Index d = all.cols() / 2;
  PairBatch out{all.leftCols(d), all.rightCols(d)};
  out.validate();
  return out;
}

void write_pairs_binary(std::ostream& out, const PairBatch& batch) {
  batch.validate();
  out.write("TSPB", 4);
  put<std::uint32_t>(out, kPairBinaryVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(batch.count()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(batch.dim()));
  put_rows(out, batch.prev);
  put_rows(out, batch.next);
}

PairBatch read_pairs_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TSPB", 4) != 0) throw InvalidArgument("not a TSPB pair file");
  const auto version = get<std::uint32_t>(in);
  if (version != kPairBinaryVersion)
    throw InvalidArgument("unsupported TSPB version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in);
  const auto dim = get<std::uint64_t>(in);
  PairBatch out;
  out.prev = get_rows(in, count, dim);
  out.next = get_rows(in, count, dim);
  out.validate();
  return out;
}

void save_pairs(const std::string& path, const PairBatch& batch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  if (ends_with(path, ".csv"))
    write_pairs_csv(out, batch);
  else
    write_pairs_binary(out, batch);
}

PairBatch load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return ends_with(path, ".csv") ? read_pairs_csv(in) : read_pairs_binary(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& prefix) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out << prefix << j << (j + 1 < m.cols() ? "," : "\n");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j) << (j + 1 < m.cols() ? "," : "\n");
}

Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::size_t cols = split_csv_line(line).size();
  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != cols)
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " fields");
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return m;
}

}  // namespace slowlab::synth
