#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the readers and writers: RFC 4180 style CSV
// fields, round-trip number formatting and atomic file output.
namespace arealstat::text {

/// Splits one CSV record. Quoted fields may contain separators and doubled
/// quotes; embedded newlines are not supported.
std::vector<std::string> split_csv(std::string_view line, char sep = ',');

std::string csv_field(std::string_view value);
std::string join_csv(const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double. NaN is "NA".
std::string format_double(double value);

/// Rounds to `digits` significant digits (for display-oriented outputs).
double round_significant(double value, int digits);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::string lower(std::string_view text);

/// Reads lines, dropping a trailing '\r' and a leading UTF-8 BOM.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::string& line);
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::istream& in_;
  std::size_t line_number_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to `path.tmp` then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace arealstat::text
