#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace diffapprox::cli {

// Empty cells print as nothing in CSV and null in JSON.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_digest;
};

// Header row, one record per row, doubles with 17 significant digits, then a
// trailing "# master_seed=...,config_digest=..." comment line.
void write_csv(std::ostream& os, const Table& table, const Provenance& prov);
// {"config_digest": ..., "results": {"columns": [...], "rows": [[...], ...]}, "seed": ...}
void write_json(std::ostream& os, const Table& table, const Provenance& prov);

std::string format_double(double v);

}  // namespace diffapprox::cli
