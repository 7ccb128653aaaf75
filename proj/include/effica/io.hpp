#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace effica {

/// Shortest text that parses back to the same double ("nan", "inf" for
/// non-finite values).
std::string format_double(double x);

/// Parses a whole field as a double; throws Error(Parse) naming `where`.
double parse_double(std::string_view field, const std::string& where);

/// Comma-separated numeric matrix, one row per line. Blank lines are
/// skipped; with `header` the first non-blank line is ignored. Errors carry
/// "<source>:<line>:<column>".
Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source_name,
                                bool header = false);
Eigen::MatrixXd read_matrix_csv_file(const std::string& path, bool header = false);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M);
void write_matrix_csv_file(const std::string& path, const Eigen::MatrixXd& M);

}  // namespace effica
