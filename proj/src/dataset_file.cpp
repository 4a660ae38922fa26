#include <charconv>
#include <fstream>
#include <sstream>

#include "grove/error.h"
#include "grove/io.h"

namespace grove {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, bool comma) {
  std::vector<std::string_view> fields;
  if (comma) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
      if (pos == std::string_view::npos) {
        break;
      }
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i == line.size()) break;
      const auto start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) {
    return false;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<NamedColumn> parse_dataset(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }

  std::size_t line_no = 0;
  while (line_no < lines.size() && trim(lines[line_no]).empty()) ++line_no;
  if (line_no == lines.size()) {
    throw DataError("empty file");
  }
  const auto header_line = trim(lines[line_no]);
  const bool comma = header_line.find(',') != std::string_view::npos;
  const auto header = split_fields(header_line, comma);
  for (const auto name : header) {
    if (name.empty()) {
      throw DataError("empty column name in header");
    }
  }

  const auto p = header.size();
  std::vector<std::vector<std::string>> cells(p);
  for (++line_no; line_no < lines.size(); ++line_no) {
    const auto line = trim(lines[line_no]);
    if (line.empty()) {
      continue;
    }
    const auto fields = split_fields(line, comma);
    if (fields.size() != p) {
      throw DataError("line " + std::to_string(line_no + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      cells[j].emplace_back(fields[j]);
    }
  }
  if (cells.empty() || cells.front().empty()) {
    throw DataError("no data rows");
  }

  std::vector<NamedColumn> columns;
  columns.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> numbers(cells[j].size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells[j].size() && numeric; ++i) {
      numeric = parse_number(cells[j][i], numbers[i]);
    }
    NamedColumn column{std::string(header[j]), {}};
    if (numeric) {
      column.values = std::move(numbers);
    } else {
      column.values = std::move(cells[j]);
    }
    columns.push_back(std::move(column));
  }
  return columns;
}

std::vector<NamedColumn> parse_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open data file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

}  // namespace grove
