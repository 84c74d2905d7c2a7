#pragma once

#include <string>
#include <vector>

namespace vbcap {

// Shortest round-trippable-enough decimal form used in every file we emit.
std::string format_double(double v);

// Writes via a temp file in the same directory, then renames over the target,
// so readers never observe a half-written file.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

std::vector<std::string> split_line(const std::string& line, char sep);

// Parses a full CSV document: first row is the header, remaining rows are
// doubles. Throws on ragged rows or unparsable cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

}  // namespace vbcap
