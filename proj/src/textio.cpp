#include "vfa/textio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vfa {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw ParseError("empty numeric field");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError("not a number: '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw ParseError("empty integer field");
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError("not an integer: '" + s + "'");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw ParseError("empty integer field");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ParseError("not an unsigned integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ParseError("not a boolean: '" + s + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& fields, char sep) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(sep);
    out += fields[i];
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int CsvDoc::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvDoc parse_csv(const std::string& text) {
  CsvDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = trim(line.substr(1));
      std::size_t eq = body.find('=');
      if (eq != std::string::npos)
        doc.metadata.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      else
        doc.metadata.emplace_back(body, "");
      continue;
    }
    std::vector<std::string> fields = split(line, ',');
    if (!have_header) {
      doc.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != doc.header.size()) {
        doc.malformed.emplace_back(lineno, "expected " + std::to_string(doc.header.size()) +
                                               " fields, got " + std::to_string(fields.size()));
        continue;
      }
      doc.rows.push_back(std::move(fields));
      doc.row_lines.push_back(lineno);
    }
  }
  return doc;
}

CsvDoc read_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::string csv_to_string(const CsvDoc& doc) {
  std::string out;
  for (const auto& [k, v] : doc.metadata) {
    out += "# " + k;
    if (!v.empty()) out += "=" + v;
    out += "\n";
  }
  out += join(doc.header, ',') + "\n";
  for (const auto& row : doc.rows) out += join(row, ',') + "\n";
  return out;
}

void write_csv(const std::string& path, const CsvDoc& doc) {
  write_file(path, csv_to_string(doc));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
}

}  // namespace vfa
