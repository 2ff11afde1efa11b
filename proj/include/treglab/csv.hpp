#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace treglab {

// RFC-4180 style CSV: fields containing comma, quote, CR or LF are quoted,
// quotes doubled. Record boundaries respect quoting, so texts may contain
// embedded newlines.

std::string csv_escape(const std::string& field);
std::string csv_join(const std::vector<std::string>& fields);

struct CsvRecord {
  std::vector<std::string> fields;
  int line = 0;  // 1-based line number where the record starts
};

std::vector<CsvRecord> parse_csv(const std::string& content);
std::vector<CsvRecord> read_csv_file(const std::filesystem::path& path);

// Formats a double with enough digits to round-trip exactly through strtod.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace treglab
