#include "diffapprox/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "diffapprox/errors.hpp"

namespace diffapprox::cli {
namespace {

using json = nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "d",  "alpha", "mu0", "mu", "nu",      "n",  "T",        "grid_points", "h",         "M",
      "replicas", "seed", "n_list", "gamma", "x0", "lambda0", "lambda", "beta", "q0", "eps_ladder",
      "r",  "R0",    "s",   "t",  "coeff_source", "source", "summary", "format", "out"};
  return keys;
}

[[noreturn]] void fail(const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); }

double real(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  // JSON has no infinity literal; thresholds may be given as "inf" / "-inf".
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(field, "expected a number");
}

double finite_real(const json& v, const std::string& field) {
  const double x = real(v, field);
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

std::int64_t integer(const json& v, const std::string& field) {
  if (v.is_number_integer()) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(field, "out of range");
    }
    return v.get<std::int64_t>();
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
  }
  fail(field, "expected an integer");
}

std::size_t positive_count(const json& v, const std::string& field) {
  const std::int64_t x = integer(v, field);
  if (x < 1) fail(field, "must be >= 1");
  return static_cast<std::size_t>(x);
}

Vec real_vector(const json& v, const std::string& field, bool allow_inf = false) {
  if (!v.is_array()) fail(field, "expected an array");
  Vec out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string name = field + "[" + std::to_string(i) + "]";
    out.push_back(allow_inf ? real(v[i], name) : finite_real(v[i], name));
  }
  return out;
}

std::string text(const json& v, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!v.is_string()) fail(field, "expected a string");
  const auto s = v.get<std::string>();
  if (allowed.size() == 0) return s;
  for (const char* a : allowed) {
    if (s == a) return s;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  fail(field, "expected one of " + list);
}

const json& required(const json& doc, const char* key) {
  if (!doc.contains(key)) fail(key, "missing required field");
  return doc.at(key);
}

bool uses_gamma(const std::string& command) {
  return command == "simulate-queue" || command == "simulate-sde" || command == "compare" ||
         command == "alt-scaling";
}

void check_length(const Vec& v, std::size_t d, const std::string& field) {
  if (v.size() != d) fail(field, "expected length d = " + std::to_string(d));
}

void validate(ExperimentConfig& c) {
  const std::size_t d = c.model.d;
  c.model.validate();
  if (!(c.T > 0.0)) fail("T", "must be > 0");
  if (!(c.h > 0.0)) fail("h", "must be > 0");
  if (c.h > c.T) fail("h", "must be <= T");
  if (c.grid_points < 1) fail("grid_points", "must be >= 1");
  if (c.replicas < 1) fail("replicas", "must be >= 1");

  if (c.x0.empty()) c.x0.assign(d, 0.0);
  check_length(c.x0, d, "x0");
  if (c.lambda0 && !(*c.lambda0 >= 0.0)) fail("lambda0", "must be >= 0");
  if (c.lambda) {
    check_length(*c.lambda, d, "lambda");
    for (std::size_t i = 0; i < d; ++i) {
      if (!((*c.lambda)[i] >= 0.0)) fail("lambda[" + std::to_string(i) + "]", "must be >= 0");
    }
  }
  if (c.beta.empty()) {
    for (double a : c.model.alpha) c.beta.push_back(1.0 / a);
  }
  check_length(c.beta, d, "beta");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(c.beta[i] >= 0.0)) fail("beta[" + std::to_string(i) + "]", "must be >= 0");
  }
  if (c.fluid_q0.empty()) c.fluid_q0 = c.beta;
  check_length(c.fluid_q0, d, "q0");

  if (c.eps_ladder.empty()) fail("eps_ladder", "must be nonempty");
  for (std::size_t j = 0; j < c.eps_ladder.size(); ++j) {
    if (!(c.eps_ladder[j] > 0.0)) fail("eps_ladder[" + std::to_string(j) + "]", "must be > 0");
  }
  for (std::size_t j = 0; j < c.n_list.size(); ++j) {
    if (c.n_list[j] < 1) fail("n_list[" + std::to_string(j) + "]", "must be >= 1");
  }
  if (c.command == "compare" && c.n_list.empty()) fail("n_list", "must be nonempty for compare");
  if (!(c.r > 0.0)) fail("r", "must be > 0");
  if (!(c.R0 > 0.0)) fail("R0", "must be > 0");
  if (!c.t) c.t = c.T;
  if (!(c.s >= 0.0)) fail("s", "must be >= 0");
  if (!(*c.t >= c.s)) fail("t", "must be >= s");
  if (*c.t > c.T) fail("t", "must be <= T");

  if (c.gamma) {
    if (!uses_gamma(c.command)) fail("gamma", "not used by " + c.command);
    if (!(*c.gamma >= 0.0) || !std::isfinite(*c.gamma)) fail("gamma", "must be finite and >= 0");
  }
  if (c.command == "alt-scaling") {
    if (!c.gamma) fail("gamma", "required for alt-scaling");
    if (*c.gamma == 1.0) {
      fail("gamma", "alt-scaling is defined only for gamma in [0, 1) or gamma > 1; gamma = 1 is the standard scaling");
    }
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate-queue", "simulate-sde", "fluid",    "compare",
                                              "occupation",     "martingale-check", "krylov-check",
                                              "functional",     "alt-scaling"};
  return names;
}

ExperimentConfig parse_config(const std::string& command, const std::string& json_text, const Overrides& ov) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) fail("command", "unknown command " + command);

  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().contains(key)) fail(key, "unknown key");
  }
  if (doc.contains("M") && doc.contains("replicas")) fail("replicas", "given twice (M and replicas)");

  ExperimentConfig c;
  c.command = command;
  c.model.d = positive_count(required(doc, "d"), "d");
  c.model.alpha = real_vector(required(doc, "alpha"), "alpha");
  c.model.mu0 = finite_real(required(doc, "mu0"), "mu0");
  c.model.mu = real_vector(required(doc, "mu"), "mu");
  c.model.nu = real_vector(required(doc, "nu"), "nu", true);
  c.model.n = integer(required(doc, "n"), "n");
  c.T = finite_real(required(doc, "T"), "T");

  if (doc.contains("grid_points")) c.grid_points = positive_count(doc["grid_points"], "grid_points");
  if (doc.contains("h")) c.h = finite_real(doc["h"], "h");
  if (doc.contains("M")) c.replicas = positive_count(doc["M"], "M");
  if (doc.contains("replicas")) c.replicas = positive_count(doc["replicas"], "replicas");
  if (doc.contains("seed")) {
    const json& v = doc["seed"];
    if (!v.is_number_unsigned()) fail("seed", "expected a non-negative 64-bit integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (doc.contains("n_list")) {
    const json& v = doc["n_list"];
    if (!v.is_array()) fail("n_list", "expected an array");
    for (std::size_t j = 0; j < v.size(); ++j) c.n_list.push_back(integer(v[j], "n_list[" + std::to_string(j) + "]"));
  }
  if (doc.contains("gamma")) c.gamma = finite_real(doc["gamma"], "gamma");
  if (doc.contains("x0")) c.x0 = real_vector(doc["x0"], "x0");
  if (doc.contains("lambda0")) c.lambda0 = finite_real(doc["lambda0"], "lambda0");
  if (doc.contains("lambda")) c.lambda = real_vector(doc["lambda"], "lambda");
  if (doc.contains("beta")) c.beta = real_vector(doc["beta"], "beta");
  if (doc.contains("q0")) c.fluid_q0 = real_vector(doc["q0"], "q0");
  if (doc.contains("eps_ladder")) c.eps_ladder = real_vector(doc["eps_ladder"], "eps_ladder");
  if (doc.contains("r")) c.r = finite_real(doc["r"], "r");
  if (doc.contains("R0")) c.R0 = finite_real(doc["R0"], "R0");
  if (doc.contains("s")) c.s = finite_real(doc["s"], "s");
  if (doc.contains("t")) c.t = finite_real(doc["t"], "t");
  if (doc.contains("coeff_source")) c.coeff_source = text(doc["coeff_source"], "coeff_source", {"limit", "prelimit"});
  if (doc.contains("source")) c.source = text(doc["source"], "source", {"sde", "queue"});
  if (doc.contains("summary")) {
    if (!doc["summary"].is_boolean()) fail("summary", "expected true or false");
    c.summary = doc["summary"].get<bool>();
  }
  std::string format = "csv";
  if (doc.contains("format")) format = text(doc["format"], "format", {"csv", "json"});
  if (doc.contains("out")) c.out = text(doc["out"], "out", {});

  if (ov.seed) c.seed = *ov.seed;
  if (ov.replicas) c.replicas = *ov.replicas;
  if (ov.out) c.out = *ov.out;
  if (ov.format) format = *ov.format;
  if (ov.grid_points) c.grid_points = *ov.grid_points;
  if (ov.h) c.h = *ov.h;
  if (ov.n_list) c.n_list = *ov.n_list;
  if (ov.gamma) c.gamma = *ov.gamma;
  if (ov.eps_ladder) c.eps_ladder = *ov.eps_ladder;
  if (format != "csv" && format != "json") fail("format", "expected one of csv|json");
  c.format = format == "json" ? Format::Json : Format::Csv;

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& command, const std::string& path, const Overrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("config", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(command, buf.str(), ov);
}

std::string canonical_json(const ExperimentConfig& c) {
  auto real_json = [](double x) -> json {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
  };
  json nu = json::array();
  for (double v : c.model.nu) nu.push_back(real_json(v));
  json doc{{"command", c.command},
           {"d", c.model.d},
           {"alpha", c.model.alpha},
           {"mu0", c.model.mu0},
           {"mu", c.model.mu},
           {"nu", nu},
           {"n", c.model.n},
           {"T", c.T},
           {"grid_points", c.grid_points},
           {"h", c.h},
           {"replicas", c.replicas},
           {"seed", c.seed},
           {"n_list", c.n_list},
           {"x0", c.x0},
           {"beta", c.beta},
           {"q0", c.fluid_q0},
           {"eps_ladder", c.eps_ladder},
           {"r", c.r},
           {"R0", c.R0},
           {"s", c.s},
           {"t", c.t.value_or(c.T)},
           {"coeff_source", c.coeff_source},
           {"source", c.source},
           {"summary", c.summary},
           {"format", c.format == Format::Json ? "json" : "csv"}};
  doc["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  doc["lambda0"] = c.lambda0 ? json(*c.lambda0) : json(nullptr);
  doc["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  // The output path is deliberately excluded: it does not affect results.
  return doc.dump();
}

std::string config_digest(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace diffapprox::cli
