#include "sselab/report.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace sselab {

Table::Table(std::string name, std::vector<std::string> columns) : name(std::move(name)), columns(std::move(columns)) {}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument(fmt::format("{}: row has {} cells, header has {}", name, row.size(), columns.size()));
  rows.push_back(std::move(row));
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(unsigned long long v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      if (!std::isfinite(v)) throw std::domain_error("refusing to serialize a non-finite value");
      return fmt::format("{:.17g}", v);
    }
  };
  return std::visit(Visitor{}, cell);
}

std::string render_report(const Table& table, const ReportMeta& meta) {
  std::string out = fmt::format("# sselab {} fingerprint={} subcommand={}\n", meta.version, meta.fingerprint,
                                meta.subcommand);
  out += "fingerprint";
  for (const auto& c : table.columns) out += "," + quote(c);
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string line = meta.fingerprint;
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      try {
        line += "," + format_cell(table.rows[r][c]);
      } catch (const std::domain_error&) {
        throw std::domain_error(
            fmt::format("{}: non-finite value in row {}, column '{}'", table.name, r, table.columns[c]));
      }
    }
    out += line + "\n";
  }
  return out;
}

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& file_name,
                                 const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / file_name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
  return path;
}

std::filesystem::path write_report(const Table& table, const std::filesystem::path& dir, const ReportMeta& meta) {
  return write_text(dir, table.name + ".csv", render_report(table, meta));
}

const char* version() { return SSELAB_VERSION; }

}  // namespace sselab
