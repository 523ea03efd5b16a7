#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vfa/errors.hpp"

namespace vfa {

// Doubles are written with %.17g so that write -> read -> write is
// byte-stable and values round-trip exactly.
std::string format_double(double v);

double parse_double(const std::string& s);   // throws ParseError
int parse_int(const std::string& s);         // throws ParseError
std::uint64_t parse_u64(const std::string& s);
bool parse_bool(const std::string& s);       // true/false/1/0

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& line, char sep);
std::string join(const std::vector<std::string>& fields, char sep);

// FNV-1a, used to stamp reports with a hash of the config they ran under.
std::uint64_t fnv1a(const std::string& text);
std::string to_hex(std::uint64_t v);

// Minimal CSV document: leading '# key=value' comment lines are kept as
// metadata so rewriting a parsed file reproduces it byte for byte.
struct CsvDoc {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;  // source line of each row (1-based)
  std::vector<std::pair<int, std::string>> malformed;  // (line number, reason)

  int column(const std::string& name) const;  // -1 when absent
};

CsvDoc read_csv(const std::string& path);                 // throws InputError if unreadable
CsvDoc parse_csv(const std::string& text);
void write_csv(const std::string& path, const CsvDoc& doc);
std::string csv_to_string(const CsvDoc& doc);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace vfa
