#pragma once

// CSV artifacts. Every file starts with a comment line
//
//   # sselab <version> fingerprint=<hex> subcommand=<name>
//
// followed by a header whose first column is `fingerprint`. Floating-point
// cells use 17 significant digits; NaN and infinities are never written.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace sselab {

using Cell = std::variant<std::string, long long, unsigned long long, double>;

struct Table {
  std::string name;  ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  Table(std::string name, std::vector<std::string> columns);
  /// Throws std::invalid_argument if the row width differs from the header.
  void add(std::vector<Cell> row);
};

struct ReportMeta {
  std::string version;
  std::string fingerprint;
  std::string subcommand;
};

/// Serialized cell; throws std::domain_error for non-finite doubles.
std::string format_cell(const Cell& cell);

/// Full file text of a table.
std::string render_report(const Table& table, const ReportMeta& meta);

/// Writes dir/<name>.csv and returns its path. Throws std::runtime_error when
/// the destination cannot be written.
std::filesystem::path write_report(const Table& table, const std::filesystem::path& dir, const ReportMeta& meta);

/// Writes text to dir/file_name, creating dir; throws std::runtime_error on failure.
std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& file_name, const std::string& text);

/// Library version string.
const char* version();

}  // namespace sselab
