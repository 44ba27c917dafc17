#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace robustrl {

// Shortest decimal form that round-trips the exact double. Every number that
// lands in an artifact file goes through this, which is what makes report
// files byte-stable across runs.
std::string format_double(double v);

std::string format_csv_row(std::span<const double> values);

// Write-to-temp-then-rename. A crash mid-write leaves either the old file or
// nothing, never a truncated artifact that parses as complete.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Minimal CSV reader for our own artifacts. Lines starting with '#' carry
// key=value metadata and are returned separately.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> metadata;
};

CsvTable parse_csv(std::string_view text);

double parse_double(std::string_view s);

}  // namespace robustrl
