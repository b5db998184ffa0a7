#pragma once

#include "ndnreuse/common.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ndnreuse {

/// Header-first CSV writer; doubles are written with 9 significant digits.
class CsvWriter {
public:
  using Cell = std::variant<std::string, double, long long, unsigned long long>;

  CsvWriter(std::ostream& out, std::vector<std::string> header) : m_out(&out), m_width(header.size())
  {
    write_row(header);
  }

  void row(const std::vector<Cell>& cells)
  {
    if (cells.size() != m_width)
      throw std::logic_error("CsvWriter: row width differs from header");
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const auto& c : cells)
      text.push_back(std::visit([](const auto& v) { return render(v); }, c));
    write_row(text);
  }

  static std::string quote(const std::string& s)
  {
    if (s.find_first_of(",\"\n") == std::string::npos)
      return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"')
        q += '"';
      q += ch;
    }
    return q + "\"";
  }

private:
  static std::string render(const std::string& s) { return s; }
  static std::string render(double v) { return fmt_num(v); }
  static std::string render(long long v) { return std::to_string(v); }
  static std::string render(unsigned long long v) { return std::to_string(v); }

  void write_row(const std::vector<std::string>& cells)
  {
    for (std::size_t i = 0; i < cells.size(); ++i)
      *m_out << (i ? "," : "") << quote(cells[i]);
    *m_out << '\n';
  }

  std::ostream* m_out;
  std::size_t m_width;
};

/// Whole-file CSV table with named columns (RFC 4180 quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw std::runtime_error("csv: no column '" + name + "'");
  }

  bool has(const std::string& name) const
  {
    for (const auto& h : header)
      if (h == name)
        return true;
    return false;
  }
};

inline std::vector<std::string>
parse_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

inline CsvTable
read_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file");
  t.header = parse_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto r = parse_csv_line(line);
    if (r.size() != t.header.size())
      throw std::runtime_error(path + ": row width differs from header");
    t.rows.push_back(std::move(r));
  }
  return t;
}

} // namespace ndnreuse
