#include "icl/dataio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace icl {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

void write_header(std::ostream& out, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
}

}  // namespace

MaskedDataset read_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file, expected a header row");
  const std::size_t d = split_line(line).size();
  std::vector<double> values;
  std::vector<bool> observed;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != d) {
      throw ParseError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string cell = trim(cells[j]);
      if (cell.empty()) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        observed.push_back(false);
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError(source + ": row " + std::to_string(line_no) + " column " + std::to_string(j + 1) +
                         ": cannot parse '" + cell + "' as a number");
      }
      values.push_back(v);
      observed.push_back(true);
    }
    ++rows;
  }
  MaskedDataset out{Matrix(rows, d, std::move(values)), Mask(rows, d)};
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) out.mask.set(i, j, observed[i * d + j]);
  return out;
}

MaskedDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const MaskedDataset& data) {
  write_header(out, data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      if (data.mask.observed(i, j)) out << format_double(data.values(i, j));
    }
    out << '\n';
  }
}

void write_csv(std::ostream& out, const Matrix& data) {
  write_csv(out, MaskedDataset{data, Mask(data.rows(), data.cols())});
}

void write_mask_csv(std::ostream& out, const Mask& mask) {
  write_header(out, mask.cols());
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::size_t j = 0; j < mask.cols(); ++j) out << (j ? "," : "") << (mask.observed(i, j) ? 1 : 0);
    out << '\n';
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void mix(std::uint64_t& h, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) {
    h ^= (word >> (8 * b)) & 0xffU;
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t checksum(const Matrix& m) {
  std::uint64_t h = kFnvOffset;
  mix(h, m.rows());
  mix(h, m.cols());
  for (double v : m.values()) mix(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

std::uint64_t checksum(const Mask& m) {
  std::uint64_t h = kFnvOffset;
  mix(h, m.rows());
  mix(h, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) mix(h, m.observed(i, j) ? 1 : 0);
  return h;
}

}  // namespace icl
