#include "diffapprox/cli/table.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace diffapprox::cli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct CsvCell {
  std::string operator()(std::monostate) const { return ""; }
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return format_double(v); }
  std::string operator()(const std::string& v) const { return csv_escape(v); }
};

struct JsonCell {
  nlohmann::json operator()(std::monostate) const { return nullptr; }
  nlohmann::json operator()(std::int64_t v) const { return v; }
  nlohmann::json operator()(double v) const { return v; }
  nlohmann::json operator()(const std::string& v) const { return v; }
};

}  // namespace

void write_csv(std::ostream& os, const Table& table, const Provenance& prov) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) os << (j ? "," : "") << csv_escape(table.columns[j]);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << std::visit(CsvCell{}, row[j]);
    os << '\n';
  }
  os << "# master_seed=" << prov.seed << ",config_digest=" << prov.config_digest << '\n';
}

void write_json(std::ostream& os, const Table& table, const Provenance& prov) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(std::visit(JsonCell{}, cell));
    rows.push_back(std::move(r));
  }
  nlohmann::json doc{{"config_digest", prov.config_digest},
                     {"seed", prov.seed},
                     {"results", {{"columns", table.columns}, {"rows", std::move(rows)}}}};
  os << doc.dump() << '\n';
}

}  // namespace diffapprox::cli
