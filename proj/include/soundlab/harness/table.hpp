#ifndef SOUNDLAB_HARNESS_TABLE_HPP
#define SOUNDLAB_HARNESS_TABLE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "soundlab/errors.hpp"

#ifndef SOUNDLAB_VERSION
#define SOUNDLAB_VERSION "0.1.0"
#endif

namespace soundlab::harness {

inline constexpr const char* kCodeVersion = SOUNDLAB_VERSION;

using Cell = std::variant<long long, double, std::string, bool>;

struct Column {
  std::string name;
  std::string description;
};

/// Named table with documented columns. Rows are written in insertion
/// order; callers insert them in a deterministic order.
class ResultTable {
 public:
  ResultTable(std::string name, std::vector<Column> columns)
      : name_(std::move(name)), columns_(std::move(columns)) {}

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw InvalidArgument("table '" + name_ + "': row has " + std::to_string(row.size()) +
                            " cells, expected " + std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(row));
  }

  std::size_t column_index(const std::string& column) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == column) return i;
    }
    throw InvalidArgument("table '" + name_ + "' has no column '" + column + "'");
  }

  /// Numeric value of a cell (integers and booleans converted).
  double number(std::size_t row, const std::string& column) const {
    const Cell& c = rows_.at(row).at(column_index(column));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
    throw InvalidArgument("cell is not numeric");
  }

  std::vector<double> column_values(const std::string& column) const {
    std::vector<double> out;
    for (std::size_t r = 0; r < rows_.size(); ++r) out.push_back(number(r, column));
    return out;
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i].name;
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format_cell(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  static std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    return std::get<std::string>(c);
  }

  /// Fixed 12-significant-digit scientific notation; nan/inf spelled out.
  static std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
  }

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Replaces non-finite numbers (not representable in JSON) by strings.
inline nlohmann::json json_safe(const nlohmann::json& j) {
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (!std::isfinite(d)) return ResultTable::format_double(d);
    return j;
  }
  if (j.is_array() || j.is_object()) {
    nlohmann::json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = json_safe(*it);
    return out;
  }
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
}

/// Writes one CSV per table plus manifest.json into `dir`.
inline void write_outputs(const std::filesystem::path& dir, const std::vector<ResultTable>& tables,
                          const nlohmann::json& resolved_config, const nlohmann::json& summary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + dir.string() + "'");
  nlohmann::json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config_hash"] = fnv1a_hex(resolved_config.dump());
  manifest["config"] = resolved_config;
  manifest["experiment"] = resolved_config.value("experiment", "");
  nlohmann::json tj = nlohmann::json::array();
  for (const ResultTable& t : tables) {
    const std::string file = t.name() + ".csv";
    write_text_file(dir / file, t.to_csv());
    nlohmann::json cols = nlohmann::json::array();
    for (const Column& c : t.columns()) cols.push_back({{"name", c.name}, {"description", c.description}});
    tj.push_back({{"file", file}, {"rows", t.rows().size()}, {"columns", cols}});
  }
  manifest["tables"] = tj;
  manifest["summary"] = json_safe(summary);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace soundlab::harness

#endif  // SOUNDLAB_HARNESS_TABLE_HPP
