#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace zipem {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks. CRLF is accepted. Blank lines are skipped.
std::vector<CsvRecord> parse_csv(std::string_view text);

/// Quotes a field only when it needs it.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace zipem
