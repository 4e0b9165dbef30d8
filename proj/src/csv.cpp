#include "reflectmc/csv.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace reflectmc {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

void CsvRow::sep() {
  if (!first_) line_.push_back(',');
  first_ = false;
}

CsvRow& CsvRow::operator<<(double v) {
  sep();
  line_ += format_double(v);
  return *this;
}

CsvRow& CsvRow::operator<<(std::int64_t v) {
  sep();
  line_ += std::to_string(v);
  return *this;
}

CsvRow& CsvRow::operator<<(std::uint64_t v) {
  sep();
  line_ += std::to_string(v);
  return *this;
}

CsvRow& CsvRow::operator<<(std::string_view v) {
  sep();
  line_ += v;
  return *this;
}

void CsvRow::write(std::ostream& os) const { os << line_ << '\n'; }

void write_csv_header(std::ostream& os, const std::vector<std::string>& columns) {
  CsvRow row;
  for (const auto& c : columns) row << std::string_view(c);
  row.write(os);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      table.columns = split_fields(line);
      have_header = true;
    } else {
      table.rows.push_back(split_fields(line));
    }
  }
  return table;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("no column named '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

}  // namespace reflectmc
