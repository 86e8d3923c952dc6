#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace siplab {

// CSV writer used for every persisted table: mandatory header row,
// floats printed with 17 significant digits so re-reads are bit-exact.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<double>& vals);
  void raw_row(const std::vector<std::string>& cells);

  static std::string format_double(double v);

 private:
  std::ofstream out_;
  std::size_t ncols_ = 0;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace siplab
