#include "fact/harness/result_table.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fact/error.hpp"
#include "fact/harness/config.hpp"

namespace fact::harness {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return out;
}

}  // namespace

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw ValidationError("ResultTable: need at least one column");
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.empty() || c.find_first_of(",\n\r\"") != std::string::npos) {
      throw ValidationError("ResultTable: bad column name '" + c + "'");
    }
    if (!seen.insert(c).second) throw ValidationError("ResultTable: duplicate column '" + c + "'");
  }
}

std::size_t ResultTable::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j] == name) return j;
  }
  throw ValidationError("ResultTable: no column '" + std::string(name) + "'");
}

std::vector<double> ResultTable::column(std::string_view name) const {
  const std::size_t j = column_index(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[j]);
  return out;
}

double ResultTable::at(std::size_t r, std::string_view name) const {
  return rows_.at(r)[column_index(name)];
}

void ResultTable::add_row(std::vector<double> values) {
  if (values.size() != columns_.size()) {
    throw ValidationError("ResultTable: row has " + std::to_string(values.size()) +
                          " values, table has " + std::to_string(columns_.size()) +
                          " columns");
  }
  rows_.push_back(std::move(values));
}

void ResultTable::set_unit(const std::string& column, std::string unit) {
  (void)column_index(column);
  units_[column] = std::move(unit);
}

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (j) out += ',';
    out += columns_[j];
  }
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out += ',';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  return out;
}

std::string ResultTable::meta_json() const {
  nlohmann::ordered_json j;
  j["columns"] = columns_;
  j["rows"] = rows_.size();
  j["metadata"] = meta_;
  j["units"] = units_;
  return j.dump(2) + "\n";
}

ResultTable ResultTable::from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text = text.substr(nl + 1);
  }
  if (lines.empty()) throw ValidationError("ResultTable: empty CSV");
  std::vector<std::string> cols;
  for (auto c : split(lines[0])) cols.emplace_back(c);
  ResultTable table(std::move(cols));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<double> row;
    for (auto cell : split(lines[i])) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError("ResultTable: bad number '" + std::string(cell) +
                              "' on CSV line " + std::to_string(i + 1));
      }
      row.push_back(v);
    }
    table.add_row(std::move(row));
  }
  return table;
}

std::filesystem::path ResultTable::meta_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void ResultTable::write(const std::filesystem::path& csv_path) const {
  write_file(csv_path, to_csv());
  write_file(meta_path(csv_path), meta_json());
}

ResultTable ResultTable::read(const std::filesystem::path& csv_path) {
  ResultTable table = from_csv(read_file(csv_path));
  const auto mp = meta_path(csv_path);
  if (std::filesystem::exists(mp)) {
    const auto j = nlohmann::json::parse(read_file(mp));
    for (const auto& [k, v] : j.at("metadata").items()) table.meta_[k] = v.get<std::string>();
    for (const auto& [k, v] : j.at("units").items()) table.units_[k] = v.get<std::string>();
  }
  return table;
}

}  // namespace fact::harness
