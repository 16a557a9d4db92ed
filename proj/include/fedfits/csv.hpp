#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fedfits::csv {

using Row = std::vector<std::string>;

/// Quotes a field when it contains a comma, quote, CR or LF (RFC 4180).
std::string escape(std::string_view field);

std::string format_row(const Row& fields);

/// Parses RFC 4180 text. Accepts LF or CRLF line endings; a trailing newline
/// does not produce an empty record.
std::vector<Row> parse(std::string_view text);

/// Shortest text with 17 significant digits; NaN becomes the empty field.
std::string format_number(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace fedfits::csv
