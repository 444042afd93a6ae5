#include "diffapprox/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "diffapprox/ctmc.hpp"
#include "diffapprox/errors.hpp"
#include "diffapprox/sde.hpp"
#include "diffapprox/stats.hpp"

namespace diffapprox::cli {
namespace {

// Sub-seed salts: every stochastic ingredient of one experiment gets its own stream family.
constexpr std::uint64_t kSdeReference = 1;
constexpr std::uint64_t kSdeNoiseFloor = 2;
constexpr std::uint64_t kQueueBase = 100;

std::string idx(const char* prefix, std::size_t i) { return prefix + std::to_string(i + 1); }

ModelParams model_at(const ExperimentConfig& c, std::int64_t n) {
  ModelParams p = c.model;
  p.n = n;
  return p;
}

DerivedRates rates_for(const ExperimentConfig& c, const ModelParams& p) {
  DerivedRates r = derive_rates(p);
  if (c.lambda0) r.lambda0 = *c.lambda0;
  if (c.lambda) r.lambda = *c.lambda;
  return r;
}

// gamma = 1 is the standard scaling.
std::optional<double> effective_gamma(const ExperimentConfig& c) {
  if (c.gamma && *c.gamma != 1.0) return c.gamma;
  return std::nullopt;
}

Centering centering_for(const ExperimentConfig& c) {
  if (auto g = effective_gamma(c)) return [g = *g](double t) { return centering_multiplier(g, t); };
  return {};
}

std::vector<std::int64_t> n_values(const ExperimentConfig& c) {
  return c.n_list.empty() ? std::vector<std::int64_t>{c.model.n} : c.n_list;
}

// Scaled queue replicas sampled on `grid`.
std::vector<SamplePath> queue_ensemble(const ExperimentConfig& c, const ModelParams& p, std::span<const double> grid,
                                       std::uint64_t seed) {
  const DerivedRates rates = rates_for(c, p);
  const QueueState q0 = initial_state(p, c.x0, c.gamma.value_or(1.0));
  const Centering centering = centering_for(c);
  return run_ensemble(
             [&](std::size_t, ReplicaStream& rng) {
               return scale(simulate_queue_on_grid(p, rates, q0, c.T, grid, rng), p, centering);
             },
             c.replicas, seed)
      .replicas;
}

std::vector<SamplePath> sde_ensemble(const ExperimentConfig& c, const ModelParams& p, std::span<const double> grid,
                                     std::uint64_t seed) {
  std::vector<SamplePath> paths(c.replicas);
  euler_maruyama_ensemble(LimitFamily(p, effective_gamma(c)), c.x0, c.T, c.h, grid, c.replicas, seed,
                          [&](std::size_t k, const SamplePath& path) { paths[k] = path; });
  return paths;
}

std::vector<std::vector<double>> terminals(const std::vector<SamplePath>& paths) {
  std::vector<std::vector<double>> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p.terminal());
  return out;
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  const double M = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / M;
  if (v.size() < 2) return {mean, 0.0};
  double m2 = 0.0;
  for (double x : v) m2 += (x - mean) * (x - mean);
  return {mean, std::sqrt(m2 / (M - 1.0) / M)};
}

Table path_table(const std::vector<SamplePath>& paths, bool summary) {
  const std::size_t d = paths.front().dim();
  const auto& times = paths.front().times();
  Table t;
  if (!summary) {
    t.columns = {"replica", "t"};
    for (std::size_t i = 0; i < d; ++i) t.columns.push_back(idx("x", i));
    for (std::size_t k = 0; k < paths.size(); ++k) {
      for (std::size_t g = 0; g < times.size(); ++g) {
        std::vector<Cell> row{static_cast<std::int64_t>(k), times[g]};
        for (std::size_t i = 0; i < d; ++i) row.emplace_back(paths[k].at(g, i));
        t.add(std::move(row));
      }
    }
    return t;
  }
  if (paths.size() < 2) throw ConfigError("summary: needs replicas >= 2");
  static const char* qnames[] = {"q05", "q25", "q50", "q75", "q95"};
  t.columns = {"t"};
  for (std::size_t i = 0; i < d; ++i) {
    for (const char* stat : {"mean", "mean_se", "var"}) t.columns.push_back(std::string(stat) + "_x" + std::to_string(i + 1));
    for (const char* q : qnames) t.columns.push_back(std::string(q) + "_x" + std::to_string(i + 1));
  }
  std::vector<std::vector<double>> at(paths.size());
  for (std::size_t g = 0; g < times.size(); ++g) {
    for (std::size_t k = 0; k < paths.size(); ++k) at[k] = paths[k].state(g);
    const Summary s = summarize(at);
    std::vector<Cell> row{times[g]};
    for (std::size_t i = 0; i < d; ++i) {
      row.emplace_back(s.mean[i]);
      row.emplace_back(s.std_error[i]);
      row.emplace_back(s.variance[i]);
      for (std::size_t j = 0; j < 5; ++j) row.emplace_back(s.quantiles[j][i]);
    }
    t.add(std::move(row));
  }
  return t;
}

Table simulate_queue_cmd(const ExperimentConfig& c) {
  return path_table(queue_ensemble(c, c.model, uniform_grid(c.T, c.grid_points), c.seed), c.summary);
}

Table simulate_sde_cmd(const ExperimentConfig& c) {
  return path_table(sde_ensemble(c, c.model, uniform_grid(c.T, c.grid_points), c.seed), c.summary);
}

Table fluid_cmd(const ExperimentConfig& c) {
  // RK4 substeps chosen so that every output grid time is an integration node.
  const std::size_t K = c.grid_points;
  const double sub = std::max(1.0, std::ceil(c.T / static_cast<double>(K) / c.h - 1e-9));
  const double dt = c.T / (static_cast<double>(K) * sub);
  const SamplePath path = fluid_ode(FluidParams{c.beta, c.fluid_q0}, c.T, dt);
  const auto stride = static_cast<std::size_t>(sub);
  Table t;
  t.columns = {"t"};
  for (std::size_t i = 0; i < c.model.d; ++i) t.columns.push_back(idx("q", i));
  for (std::size_t g = 0; g <= K; ++g) {
    std::vector<Cell> row{path.times()[g * stride]};
    for (std::size_t i = 0; i < c.model.d; ++i) row.emplace_back(path.at(g * stride, i));
    t.add(std::move(row));
  }
  return t;
}

Table compare_cmd(const ExperimentConfig& c) {
  const std::vector<double> at_T{c.T};
  const auto reference = terminals(sde_ensemble(c, c.model, at_T, derive_seed(c.seed, kSdeReference)));
  const auto second = terminals(sde_ensemble(c, c.model, at_T, derive_seed(c.seed, kSdeNoiseFloor)));
  const double bound = ks_noise_floor(c.replicas, c.replicas);
  const std::size_t d = c.model.d;

  Table t;
  t.columns = {"kind", "n", "M"};
  for (std::size_t i = 0; i < d; ++i) t.columns.push_back(idx("ks_x", i));
  t.columns.insert(t.columns.end(), {"ks_max", "noise_floor_bound"});
  auto emit = [&](const std::string& kind, Cell n, const KsReport& ks) {
    std::vector<Cell> row{kind, n, static_cast<std::int64_t>(c.replicas)};
    for (double v : ks.per_coordinate) row.emplace_back(v);
    row.emplace_back(ks.max);
    row.emplace_back(bound);
    t.add(std::move(row));
  };
  const auto ns = n_values(c);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const auto queue = terminals(queue_ensemble(c, model_at(c, ns[j]), at_T, derive_seed(c.seed, kQueueBase + j)));
    emit("queue", ns[j], ks_per_coordinate(queue, reference));
  }
  emit("noise_floor", std::monostate{}, ks_per_coordinate(second, reference));
  return t;
}

Table occupation_cmd(const ExperimentConfig& c) {
  const auto& eps = c.eps_ladder;
  std::vector<std::vector<double>> frac(eps.size(), std::vector<double>(c.replicas));
  if (c.source == "sde") {
    euler_maruyama_ensemble(LimitFamily(c.model), c.x0, c.T, c.h, uniform_grid(c.T, c.grid_points), c.replicas,
                            c.seed, [&](std::size_t k, const SamplePath& path) {
                              for (std::size_t j = 0; j < eps.size(); ++j) frac[j][k] = occupation_near_G(path, c.model, eps[j]);
                            });
  } else {
    const DerivedRates rates = rates_for(c, c.model);
    const QueueState q0 = initial_state(c.model, c.x0);
    const auto ens = run_ensemble(
        [&](std::size_t, ReplicaStream& rng) {
          const QueuePath path = simulate_queue(c.model, rates, q0, c.T, rng);
          std::vector<double> out;
          for (double e : eps) out.push_back(occupation_near_G(path, c.model, e));
          return out;
        },
        c.replicas, c.seed);
    for (std::size_t k = 0; k < c.replicas; ++k) {
      for (std::size_t j = 0; j < eps.size(); ++j) frac[j][k] = ens.replicas[k][j];
    }
  }
  Table t;
  t.columns = {"eps", "fraction", "std_error", "ratio_to_previous"};
  double prev = 0.0;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const auto [mean, se] = mean_and_se(frac[j]);
    Cell ratio = j == 0 || prev == 0.0 ? Cell{} : Cell{mean / prev};
    t.add({eps[j], mean, se, ratio});
    prev = mean;
  }
  return t;
}

Table martingale_cmd(const ExperimentConfig& c) {
  const auto grid = uniform_grid(c.T, c.grid_points);
  const std::vector<SamplePath> paths =
      c.source == "sde" ? sde_ensemble(c, c.model, grid, c.seed) : queue_ensemble(c, c.model, grid, c.seed);
  const CoeffSource coeffs = c.coeff_source == "limit" ? limit_coefficients(c.model) : prelimit_coefficients(c.model);
  Table t;
  t.columns = {"test_function", "estimate", "std_error", "M", "snapped"};
  for (const TestFunction& u : test_function_family(c.model.d, c.R0)) {
    const ResidualReport r = martingale_residual(paths, u, coeffs, c.s, c.t.value_or(c.T));
    t.add({r.test_function_id, r.estimate, r.std_error, static_cast<std::int64_t>(r.M),
           static_cast<std::int64_t>(r.snapped ? 1 : 0)});
  }
  return t;
}

Table krylov_cmd(const ExperimentConfig& c) {
  const auto& eps = c.eps_ladder;
  std::vector<std::vector<double>> lhs(eps.size(), std::vector<double>(c.replicas));
  std::vector<double> rhs(eps.size());
  euler_maruyama_ensemble(LimitFamily(c.model), c.x0, c.T, c.h, uniform_grid(c.T, c.grid_points), c.replicas,
                          c.seed, [&](std::size_t k, const SamplePath& path) {
                            for (std::size_t j = 0; j < eps.size(); ++j) {
                              lhs[j][k] = krylov_ratio(std::span(&path, 1), c.model, eps[j], c.r, c.T).lhs;
                            }
                          });
  Table t;
  t.columns = {"eps", "lhs", "lhs_std_error", "rhs", "ratio"};
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const auto [mean, se] = mean_and_se(lhs[j]);
    const double volume = slab_ball_volume(c.model.d, c.model.nu[0], eps[j], c.r);
    const double r = volume > 0.0 ? std::pow(c.T * volume, 1.0 / static_cast<double>(c.model.d + 1)) : 0.0;
    t.add({eps[j], mean, se, r, r > 0.0 ? Cell{mean / r} : Cell{}});
  }
  return t;
}

Table functional_cmd(const ExperimentConfig& c) {
  const ModelParams& p = c.model;
  const std::size_t d = p.d;
  const VectorFn f = [&p](std::span<const double> x) { return delta(x, p.alpha); };
  const DerivedRates rates = rates_for(c, p);
  const QueueState q0 = initial_state(p, c.x0);
  const std::vector<double> at_T{c.T};
  const auto queue = run_ensemble(
      [&](std::size_t, ReplicaStream& rng) {
        return functional_integral(simulate_queue(p, rates, q0, c.T, rng), f, p, at_T).terminal();
      },
      c.replicas, derive_seed(c.seed, kQueueBase));
  std::vector<std::vector<double>> sde(c.replicas);
  euler_maruyama_ensemble(LimitFamily(p), c.x0, c.T, c.h, em_times(c.T, c.h), c.replicas,
                          derive_seed(c.seed, kSdeReference),
                          [&](std::size_t k, const SamplePath& path) { sde[k] = functional_integral(path, f).terminal(); });
  Table t;
  t.columns = {"replica"};
  for (std::size_t i = 0; i < d; ++i) t.columns.push_back(idx("queue_y", i));
  t.columns.push_back("queue_sum");
  for (std::size_t i = 0; i < d; ++i) t.columns.push_back(idx("sde_y", i));
  t.columns.push_back("sde_sum");
  for (std::size_t k = 0; k < c.replicas; ++k) {
    std::vector<Cell> row{static_cast<std::int64_t>(k)};
    for (const std::vector<double>* y : {&queue.replicas[k], static_cast<const std::vector<double>*>(&sde[k])}) {
      double sum = 0.0;
      for (double v : *y) {
        row.emplace_back(v);
        sum += v;
      }
      row.emplace_back(sum);
    }
    t.add(std::move(row));
  }
  return t;
}

Table alt_scaling_cmd(const ExperimentConfig& c) {
  const std::vector<double> at_T{c.T};
  Table t;
  t.columns = {"source", "n", "coordinate", "M", "mean", "mean_se", "variance", "variance_se"};
  auto emit = [&](const std::string& source, Cell n, const std::vector<std::vector<double>>& samples) {
    const Summary s = summarize(samples);
    for (std::size_t i = 0; i < c.model.d; ++i) {
      t.add({source, n, static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(s.M), s.mean[i], s.std_error[i],
             s.variance[i], s.variance_std_error[i]});
    }
  };
  emit("sde", std::monostate{}, terminals(sde_ensemble(c, c.model, at_T, derive_seed(c.seed, kSdeReference))));
  const auto ns = n_values(c);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    emit("queue", ns[j], terminals(queue_ensemble(c, model_at(c, ns[j]), at_T, derive_seed(c.seed, kQueueBase + j))));
  }
  return t;
}

}  // namespace

Table run_command(const ExperimentConfig& c) {
  if (c.command == "simulate-queue") return simulate_queue_cmd(c);
  if (c.command == "simulate-sde") return simulate_sde_cmd(c);
  if (c.command == "fluid") return fluid_cmd(c);
  if (c.command == "compare") return compare_cmd(c);
  if (c.command == "occupation") return occupation_cmd(c);
  if (c.command == "martingale-check") return martingale_cmd(c);
  if (c.command == "krylov-check") return krylov_cmd(c);
  if (c.command == "functional") return functional_cmd(c);
  if (c.command == "alt-scaling") return alt_scaling_cmd(c);
  throw ConfigError("command: unknown command " + c.command);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heavy-traffic queueing network simulator and diffusion-approximation checks"};
  std::string command, config_path;
  Overrides ov;
  std::string format;
  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--seed", ov.seed, "Master seed (unsigned 64-bit)");
  app.add_option("--replicas", ov.replicas, "Number of replicas M");
  app.add_option("--out", ov.out, "Output file (default: stdout)");
  app.add_option("--format", ov.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--grid", ov.grid_points, "Number of grid intervals K");
  app.add_option("--step", ov.h, "Euler-Maruyama / RK4 step h");
  app.add_option("--n-list", ov.n_list, "Comma-separated scaling parameters")->delimiter(',');
  app.add_option("--gamma", ov.gamma, "Initial-condition scale gamma");
  app.add_option("--eps-ladder", ov.eps_ladder, "Comma-separated neighbourhood widths")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    const ExperimentConfig cfg = load_config(command, config_path, ov);
    const Table table = run_command(cfg);
    const Provenance prov{cfg.seed, config_digest(cfg)};
    std::ostringstream buf;
    if (cfg.format == Format::Json) {
      write_json(buf, table, prov);
    } else {
      write_csv(buf, table, prov);
    }
    if (cfg.out.empty()) {
      out << buf.str();
    } else {
      std::ofstream file(cfg.out, std::ios::binary | std::ios::trunc);
      file << buf.str();
      if (!file.flush()) throw std::runtime_error("cannot write " + cfg.out);
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace diffapprox::cli
