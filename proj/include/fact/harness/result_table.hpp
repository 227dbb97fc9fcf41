#pragma once

// Rectangular table of doubles with named columns. Written as CSV (exact
// header, shortest round-trip number formatting) plus a `<name>.meta.json`
// sidecar holding the metadata and column units.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fact::harness {

inline constexpr const char* kArtifactVersion = "1.0.0";

class ResultTable {
 public:
  explicit ResultTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t row_count() const noexcept { return rows_.size(); }
  const std::vector<double>& row(std::size_t r) const { return rows_.at(r); }
  std::size_t column_index(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  double at(std::size_t r, std::string_view name) const;

  void add_row(std::vector<double> values);

  void set_meta(const std::string& key, std::string value) { meta_[key] = std::move(value); }
  const std::map<std::string, std::string>& meta() const noexcept { return meta_; }
  void set_unit(const std::string& column, std::string unit);
  const std::map<std::string, std::string>& units() const noexcept { return units_; }

  std::string to_csv() const;
  std::string meta_json() const;
  static ResultTable from_csv(std::string_view text);

  // Writes path and path with extension replaced by .meta.json.
  void write(const std::filesystem::path& csv_path) const;
  // Reads the CSV and, when present, the sidecar.
  static ResultTable read(const std::filesystem::path& csv_path);
  static std::filesystem::path meta_path(const std::filesystem::path& csv_path);

  bool operator==(const ResultTable&) const = default;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::map<std::string, std::string> meta_;
  std::map<std::string, std::string> units_;
};

}  // namespace fact::harness
