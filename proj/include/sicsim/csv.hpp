#pragma once

// CSV emission and parsing with a fixed numeric format, so that repeated
// runs with the same configuration produce byte-identical files on every
// platform (binary streams, '\n' line endings, "%.6g" numbers).

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

namespace sicsim {

// The numeric format of every CSV the tool writes: printf "%.6g".
std::string g6(double value);

class CsvFile {
 public:
  // Opens in binary mode and writes the header row.  Throws
  // std::runtime_error when the file cannot be opened.
  CsvFile(const std::string& path, const std::vector<std::string>& header);
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;
  ~CsvFile();

  // Cells must not contain commas or newlines (std::logic_error).  The cell
  // count must match the header (std::logic_error).
  void row(const std::vector<std::string>& cells);

  // Flush and verify; throws std::runtime_error on write failure.  Called
  // implicitly by the destructor, silently.
  void close();

  const std::string& path() const { return path_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_ = 0;
  bool closed_ = false;
};

// Split CSV text into rows of cells.  No quoting rules: cells are the text
// between commas, rows the text between '\n'.  A trailing newline does not
// produce an empty row.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Whole-file reads/writes in binary mode; throw std::runtime_error on I/O
// failure.
std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace sicsim
