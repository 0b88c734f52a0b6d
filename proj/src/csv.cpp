#include "sicsim/csv.hpp"

#include <cstdio>
#include <iterator>
#include <stdexcept>

namespace sicsim {

std::string g6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

CsvFile::CsvFile(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  if (header.empty()) throw std::logic_error("CSV header must not be empty");
  row(header);
}

CsvFile::~CsvFile() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
      // Destructors must not throw; explicit close() reports failures.
    }
  }
}

void CsvFile::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::logic_error("CSV row has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(columns_));
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string& cell = cells[i];
    if (cell.find_first_of(",\n\r") != std::string::npos)
      throw std::logic_error("CSV cell must not contain commas or newlines: " +
                             cell);
    if (i) line += ',';
    line += cell;
  }
  line += '\n';
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
}

void CsvFile::close() {
  if (closed_) return;
  closed_ = true;
  out_.flush();
  if (!out_) throw std::runtime_error("failed writing " + path_);
  out_.close();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::vector<std::string> cells;
    std::size_t cell_start = pos;
    for (std::size_t i = pos; i <= eol; ++i) {
      if (i == eol || text[i] == ',') {
        cells.emplace_back(text.substr(cell_start, i - cell_start));
        cell_start = i + 1;
      }
    }
    rows.push_back(std::move(cells));
    pos = eol + 1;
  }
  return rows;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sicsim
