#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace satrad::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

// Comma-separated file with optional `# key: value` metadata lines. Blank
// lines and comment lines without a colon are skipped.
struct Document {
  std::string source;  // file name used in error messages
  std::map<std::string, std::string> meta;
  std::vector<Row> rows;

  bool has(const std::string& key) const { return meta.count(key) != 0; }
  const std::string& require(const std::string& key) const;
};

Document parse(std::string_view text, std::string source);
Document read(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Parses a floating point field, throwing a parse error naming file and line.
double to_double(const std::string& field, const std::string& source, std::size_t line);

}  // namespace satrad::csv
