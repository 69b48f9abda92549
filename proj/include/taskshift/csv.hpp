#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace taskshift {

/// A table of already-formatted cells. Written as RFC 4180 CSV with "\n"
/// line endings; fields are quoted only when they need it.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name; throws InvalidConfig when missing.
  std::size_t column(const std::string& name) const;
};

// %.17g, which round-trips every finite double. Non-finite values print as
// inf, -inf and nan.
std::string format_double(double x);
std::string format_optional(const std::optional<double>& x);

// Empty cells map to nullopt.
std::optional<double> parse_optional(const std::string& cell);

void write_csv(std::ostream& out, const Table& table);
std::string to_csv(const Table& table);

// Throws Io on malformed quoting or ragged rows.
Table read_csv(std::istream& in);
Table parse_csv(const std::string& text);

}  // namespace taskshift
