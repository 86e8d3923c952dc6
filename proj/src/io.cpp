#include "siplab/io.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace siplab {

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string());
}

void CsvWriter::header(const std::vector<std::string>& cols) {
  ncols_ = cols.size();
  for (std::size_t i = 0; i < cols.size(); ++i)
    out_ << cols[i] << (i + 1 < cols.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& vals) {
  if (ncols_ && vals.size() != ncols_)
    throw std::runtime_error("csv row width mismatch");
  for (std::size_t i = 0; i < vals.size(); ++i)
    out_ << format_double(vals[i]) << (i + 1 < vals.size() ? "," : "\n");
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  if (ncols_ && cells.size() != ncols_)
    throw std::runtime_error("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i)
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

std::string CsvWriter::format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
}

}  // namespace siplab
