#pragma once

#include <string>
#include <vector>

namespace gwc {

// Parsed CSV: UTF-8, comma-delimited, first row is the header. Quoted fields
// with doubled quotes are understood; embedded newlines are not.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column, -1 if absent.
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Splits one CSV line, honouring quotes.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string csv_escape(const std::string& field);

// Floating-point serialization used for every CSV the library writes:
// 17 significant digits, round-trips bit-for-bit.
std::string format_double(double v);

// Strict double parse: rejects empty cells, trailing garbage and non-finite
// values (NaN/inf). Returns false on failure.
bool parse_double(const std::string& cell, double& out);

// Strict integer parse.
bool parse_long(const std::string& cell, long& out);

} // namespace gwc
