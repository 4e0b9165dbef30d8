#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace reflectmc {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Accumulates one comma-separated record.
class CsvRow {
 public:
  CsvRow& operator<<(double v);
  CsvRow& operator<<(std::int64_t v);
  CsvRow& operator<<(std::uint64_t v);
  CsvRow& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  CsvRow& operator<<(std::string_view v);

  void write(std::ostream& os) const;

 private:
  void sep();
  std::string line_;
  bool first_ = true;
};

void write_csv_header(std::ostream& os, const std::vector<std::string>& columns);

/// Minimal reader for the files this library writes: comment lines starting
/// with '#' are returned separately, no quoting.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(std::istream& is);

}  // namespace reflectmc
