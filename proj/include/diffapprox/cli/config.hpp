#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffapprox/model.hpp"

namespace diffapprox::cli {

enum class Format { Csv, Json };

struct ExperimentConfig {
  std::string command;
  ModelParams model;
  double T = 0.0;
  std::size_t grid_points = 1000;
  double h = 1e-3;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> n_list;
  std::optional<double> gamma;
  Vec x0;  // defaults to zeros

  // Rate overrides; unset means the heavy-traffic rates derived from the model.
  std::optional<double> lambda0;
  std::optional<Vec> lambda;

  // fluid
  Vec beta;      // defaults to 1 / alpha
  Vec fluid_q0;  // defaults to beta

  // occupation, krylov-check
  Vec eps_ladder{0.4, 0.2, 0.1, 0.05};
  double r = 5.0;

  // martingale-check
  double R0 = 6.0;
  double s = 0.0;
  std::optional<double> t;  // defaults to T
  std::string coeff_source = "limit";  // limit | prelimit

  std::string source = "sde";  // sde | queue, for occupation and martingale-check
  bool summary = false;        // simulate-*: per-grid-point summary instead of per-replica paths

  Format format = Format::Csv;
  std::string out;  // empty: stdout
};

// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::size_t> grid_points;
  std::optional<double> h;
  std::optional<std::vector<std::int64_t>> n_list;
  std::optional<double> gamma;
  std::optional<Vec> eps_ladder;
};

const std::vector<std::string>& command_names();

// Strict parse: unknown keys, missing required fields and invalid values raise
// ConfigError naming the field.
ExperimentConfig parse_config(const std::string& command, const std::string& json_text,
                              const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& command, const std::string& path,
                             const Overrides& overrides = {});

// Canonical JSON (sorted keys, defaults filled) of the resolved configuration.
std::string canonical_json(const ExperimentConfig& cfg);
// 64-bit FNV-1a of canonical_json, as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace diffapprox::cli
