#include "effica/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "effica/error.hpp"

namespace effica {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(std::string_view field, const std::string& where) {
  const std::string_view f = trim(field);
  if (f == "nan") return std::nan("");
  if (f == "inf") return INFINITY;
  if (f == "-inf") return -INFINITY;
  double value = 0.0;
  const char* begin = f.data();
  if (!f.empty() && f.front() == '+') ++begin;
  const auto res = std::from_chars(begin, f.data() + f.size(), value);
  if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
    throw Error(ErrorKind::Parse, where + ": not a number: '" + std::string(f) + "'");
  }
  return value;
}

Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source_name, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t column = 1;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_double(field, source_name + ":" + std::to_string(line_no) + ":" +
                                            std::to_string(column)));
      if (comma == std::string::npos) break;
      start = comma + 1;
      ++column;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Parse, source_name + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(rows.front().size()) + " columns, got " +
                                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Parse, source_name + ": empty input");

  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rows[i][j];
  return M;
}

Eigen::MatrixXd read_matrix_csv_file(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open");
  return read_matrix_csv(in, path, header);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Parse, path + ": cannot open for writing");
  write_matrix_csv(out, M);
  if (!out) throw Error(ErrorKind::Parse, path + ": write failed");
}

}  // namespace effica
