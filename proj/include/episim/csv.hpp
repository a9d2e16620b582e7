#pragma once

// Minimal CSV helpers for the metrics and profile tables. Fields may be
// double-quoted; embedded quotes are doubled.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace episim::csv {

std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Fixed 10 significant digits, so tables are stable byte for byte.
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value);

// Empty field -> nullopt. Throws std::invalid_argument on junk.
std::optional<double> parse_optional(std::string_view field);
double parse_number(std::string_view field);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws std::invalid_argument when absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

// First non-empty line is the header. Throws std::invalid_argument on rows
// whose width differs from the header.
Table read_table(std::istream& in);

}  // namespace episim::csv
