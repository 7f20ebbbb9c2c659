#include "adaptsim/textio.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adaptsim/errors.hpp"

namespace adaptsim {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& file, int line) {
  const auto t = trim(text);
  if (t == "inf" || t == "Infinity") return INFINITY;
  double v = 0.0;
  const char* begin = t.data();
  if (!t.empty() && *begin == '+') ++begin;
  auto res = std::from_chars(begin, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError(file, line, "expected a number, got '" + std::string(t) + "'");
  return v;
}

long long parse_int(std::string_view text, const std::string& file, int line) {
  const auto t = trim(text);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError(file, line, "expected an integer, got '" + std::string(t) + "'");
  return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError(file, 1, "missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(const std::string& content, const std::string& file) {
  CsvTable table;
  table.file = file;
  std::istringstream in(content);
  std::string raw;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, ',');
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() > table.header.size())
      throw ParseError(file, lineno,
                       "expected at most " + std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    fields.resize(table.header.size());
    table.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw ParseError(file, 1, "empty CSV file");
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

}  // namespace adaptsim
