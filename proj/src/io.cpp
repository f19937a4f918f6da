#include "laplace/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "laplace/error.hpp"

namespace laplace {

namespace {

Error parse_error(const std::string& source, std::size_t line, const std::string& what) {
  return Error(Errc::parse, source + ":" + std::to_string(line) + ": " + what);
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

bool is_comment(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  return first != std::string_view::npos && s[first] == '#';
}

std::vector<double> parse_row(std::string_view line, const std::string& source, std::size_t ln) {
  std::vector<double> row;
  std::size_t i = 0;
  auto separator = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && separator(line[i])) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !separator(line[j])) ++j;
    std::string_view token = line.substr(i, j - i);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || end != token.data() + token.size()) {
      throw parse_error(source, ln, "not a number: '" + std::string(line.substr(i, j - i)) + "'");
    }
    row.push_back(value);
    i = j;
  }
  return row;
}

DenseMatrix assemble(const std::vector<std::vector<double>>& rows, const std::string& source,
                     std::size_t ln) {
  if (rows.empty()) throw parse_error(source, ln, "no matrix rows");
  RowMatrix m(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  try {
    return DenseMatrix(std::move(m));
  } catch (const Error& e) {
    throw parse_error(source, ln, e.what());
  }
}

void append_row(std::vector<std::vector<double>>& rows, std::vector<double> row,
                const std::string& source, std::size_t ln) {
  if (!rows.empty() && row.size() != rows.front().size()) {
    throw parse_error(source, ln,
                      "row has " + std::to_string(row.size()) + " entries, expected " +
                          std::to_string(rows.front().size()));
  }
  rows.push_back(std::move(row));
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  return in;
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

DenseMatrix parse_matrix(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (is_blank(line) || is_comment(line)) continue;
    append_row(rows, parse_row(line, source, ln), source, ln);
  }
  return assemble(rows, source, ln);
}

DenseMatrix read_matrix(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_matrix(in, path);
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix(const std::string& path, const DenseMatrix& m) {
  write_file(path, [&](std::ostream& out) { write_matrix(out, m); });
}

MvslSample read_mvsl_dataset(const std::string& path) { return MvslSample(read_matrix(path)); }

void write_mvsl_dataset(const std::string& path, const MvslSample& data) {
  write_matrix(path, data.observations());
}

MatslSample parse_matsl_dataset(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t ln = 0;
  std::vector<double> header;
  while (std::getline(in, line)) {
    ++ln;
    if (is_blank(line) || is_comment(line)) continue;
    header = parse_row(line, source, ln);
    break;
  }
  auto positive_int = [](double v) { return v >= 1 && v == static_cast<double>(static_cast<long>(v)); };
  if (header.size() != 3 || !positive_int(header[0]) || !positive_int(header[1]) ||
      !positive_int(header[2])) {
    throw parse_error(source, ln, "expected header 'N p q' with positive integers");
  }
  const auto n = static_cast<std::size_t>(header[0]);
  const auto p = static_cast<std::size_t>(header[1]);
  const auto q = static_cast<std::size_t>(header[2]);

  std::vector<DenseMatrix> obs;
  obs.reserve(n);
  std::vector<std::vector<double>> rows;
  auto finish_block = [&] {
    if (rows.empty()) return;
    if (rows.size() != p || rows.front().size() != q) {
      throw parse_error(source, ln,
                        "observation " + std::to_string(obs.size()) + " is " +
                            std::to_string(rows.size()) + "x" + std::to_string(rows.front().size()) +
                            ", expected " + std::to_string(p) + "x" + std::to_string(q));
    }
    obs.push_back(assemble(rows, source, ln));
    rows.clear();
  };
  while (std::getline(in, line)) {
    ++ln;
    if (is_comment(line)) continue;
    if (is_blank(line)) {
      finish_block();
      continue;
    }
    std::vector<double> row = parse_row(line, source, ln);
    if (row.size() != q) {
      throw parse_error(source, ln,
                        "row has " + std::to_string(row.size()) + " entries, expected " +
                            std::to_string(q));
    }
    rows.push_back(std::move(row));
    if (rows.size() > p) {
      throw parse_error(source, ln, "block has more than " + std::to_string(p) + " rows");
    }
  }
  finish_block();
  if (obs.size() != n) {
    throw parse_error(source, ln,
                      "header announces " + std::to_string(n) + " observations, found " +
                          std::to_string(obs.size()));
  }
  return MatslSample(std::move(obs));
}

MatslSample read_matsl_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_matsl_dataset(in, path);
}

void write_matsl_dataset(std::ostream& out, const MatslSample& data) {
  out << data.n() << ' ' << data.p() << ' ' << data.q() << '\n';
  for (const DenseMatrix& x : data.observations()) {
    out << '\n';
    write_matrix(out, x);
  }
}

void write_matsl_dataset(const std::string& path, const MatslSample& data) {
  write_file(path, [&](std::ostream& out) { write_matsl_dataset(out, data); });
}

}  // namespace laplace
