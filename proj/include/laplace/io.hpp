#pragma once

#include <iosfwd>
#include <string>

#include "laplace/matrix.hpp"
#include "laplace/matsl.hpp"
#include "laplace/mvsl.hpp"

namespace laplace {

// Matrix text format: lines starting with '#' are comments, one matrix row
// per line, entries separated by commas and/or whitespace. Every row must
// have the same number of entries. Values are written with 17 significant
// digits so they read back bit for bit.

/// Parse a matrix from a stream. `source` names the input in diagnostics.
DenseMatrix parse_matrix(std::istream& in, const std::string& source);
DenseMatrix read_matrix(const std::string& path);

void write_matrix(std::ostream& out, const DenseMatrix& m);
void write_matrix(const std::string& path, const DenseMatrix& m);

/// Dataset of N rows, one observation per row.
MvslSample read_mvsl_dataset(const std::string& path);
void write_mvsl_dataset(const std::string& path, const MvslSample& data);

/// Header "N p q", then N blocks of p rows by q columns separated by blank
/// lines.
MatslSample parse_matsl_dataset(std::istream& in, const std::string& source);
MatslSample read_matsl_dataset(const std::string& path);
void write_matsl_dataset(std::ostream& out, const MatslSample& data);
void write_matsl_dataset(const std::string& path, const MatslSample& data);

/// Shortest round-tripping decimal form of x.
std::string format_double(double x);

}  // namespace laplace
