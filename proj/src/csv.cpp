#include "satrad/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "satrad/error.hpp"

namespace satrad {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::range: return "range";
    case ErrorKind::config: return "config";
    case ErrorKind::statistics: return "statistics";
  }
  return "unknown";
}

namespace csv {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::string& Document::require(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw Error(ErrorKind::parse, source + ": missing '# " + key + ":' header");
  }
  return it->second;
}

Document parse(std::string_view text, std::string source) {
  Document doc;
  doc.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      auto colon = line.find(':');
      if (colon != std::string::npos) {
        doc.meta[to_lower(trim(std::string_view(line).substr(1, colon - 1)))] =
            trim(std::string_view(line).substr(colon + 1));
      }
      continue;
    }
    Row row;
    row.line = line_no;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      row.fields.push_back(trim(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

Document read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

double to_double(const std::string& field, const std::string& source, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorKind::parse,
                source + ":" + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return value;
}

}  // namespace csv
}  // namespace satrad
