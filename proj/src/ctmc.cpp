#include "diffapprox/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diffapprox/errors.hpp"

namespace diffapprox {

namespace {

void check_grid(std::span<const double> grid, double horizon) {
  const double slack = 1e-12 * std::max(1.0, horizon);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] >= 0.0)) throw ConfigError("grid: times must be >= 0");
    if (grid[g] > horizon + slack) {
      throw ConfigError("grid: time " + std::to_string(grid[g]) + " exceeds horizon " + std::to_string(horizon));
    }
    if (g > 0 && grid[g] < grid[g - 1]) throw ConfigError("grid: times must be nondecreasing");
  }
}

void check_initial(const ModelParams& p, const QueueState& q0) {
  if (q0.q.size() != p.d) throw ConfigError("q0: expected " + std::to_string(p.d) + " entries");
  for (std::size_t i = 0; i < p.d; ++i) {
    if (q0.q[i] < 0) throw ConfigError("q0[" + std::to_string(i) + "]: must be >= 0");
  }
}

}  // namespace

void event_rates(const QueueState& state, const DerivedRates& rates, std::span<const double> alpha,
                 std::vector<Channel>& out) {
  out.clear();
  const std::size_t d = state.q.size();
  if (rates.lambda0 > 0.0) {
    // Routing on Q equals routing on Q - n/alpha since alpha_i * n / alpha_i = n for all i.
    out.push_back({rates.lambda0, route(std::span<const std::int64_t>(state.q), alpha), +1,
                   EventKind::RoutedArrival});
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (rates.lambda[i] > 0.0) out.push_back({rates.lambda[i], i, +1, EventKind::DedicatedArrival});
  }
  for (std::size_t i = 0; i < d; ++i) {
    const std::int64_t q = state.q[i];
    if (q <= 0) continue;
    if (q < rates.thresholds[i]) {
      out.push_back({static_cast<double>(q), i, -1, EventKind::SingleDeparture});
    } else {
      const std::int64_t pairs = q / 2;
      if (pairs > 0) out.push_back({static_cast<double>(pairs), i, -2, EventKind::PairDeparture});
      if (q % 2 == 1) out.push_back({1.0, i, -1, EventKind::OddSingleton});
    }
  }
}

std::vector<Channel> event_rates(const QueueState& state, const DerivedRates& rates,
                                 std::span<const double> alpha) {
  std::vector<Channel> out;
  event_rates(state, rates, alpha, out);
  return out;
}

std::size_t QueuePath::index_at(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
}

void QueuePath::push(double t, std::span<const std::int64_t> q) {
  times_.push_back(t);
  states_.insert(states_.end(), q.begin(), q.end());
}

QueueState initial_state(const ModelParams& p, std::span<const double> x0, double gamma) {
  p.validate();
  if (x0.size() != p.d) throw ConfigError("x0: expected " + std::to_string(p.d) + " entries");
  const double nn = static_cast<double>(p.n);
  QueueState s{std::vector<std::int64_t>(p.d)};
  for (std::size_t i = 0; i < p.d; ++i) {
    const double target = gamma * nn / p.alpha[i] + x0[i] * std::sqrt(nn);
    if (!std::isfinite(target)) throw ConfigError("x0[" + std::to_string(i) + "]: initial queue not finite");
    s.q[i] = std::max<std::int64_t>(0, std::llround(target));
  }
  return s;
}

std::uint64_t simulate_queue_visit(const ModelParams& p, const DerivedRates& rates, const QueueState& q0,
                                   double T, ReplicaStream& rng, const QueueVisitor& visit,
                                   SimulationLimits limits) {
  check_initial(p, q0);
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T: must be finite and > 0");

  QueueState state = q0;
  std::vector<Channel> channels;
  channels.reserve(1 + 3 * p.d);
  visit(0.0, state.q);

  double t = 0.0;
  std::uint64_t events = 0;
  for (;;) {
    event_rates(state, rates, p.alpha, channels);
    double total = 0.0;
    for (const Channel& c : channels) total += c.rate;
    if (total == 0.0) break;
    if (!std::isfinite(total)) {
      throw NumericError("simulate_queue: non-finite total rate at t=" + std::to_string(t));
    }
    t += rng.exponential(total);
    if (t >= T) break;

    const double target = rng.uniform() * total;
    const Channel* chosen = &channels.back();
    double acc = 0.0;
    for (const Channel& c : channels) {
      acc += c.rate;
      if (target < acc) {
        chosen = &c;
        break;
      }
    }
    state.q[chosen->station] += chosen->jump;
    if (++events > limits.event_cap) {
      throw NumericError("simulate_queue: event cap " + std::to_string(limits.event_cap) +
                         " exceeded; use grid-sampling mode (simulate_queue_on_grid) for long runs");
    }
    visit(t, state.q);
  }
  return events;
}

QueuePath simulate_queue(const ModelParams& p, const DerivedRates& rates, const QueueState& q0, double T,
                         ReplicaStream& rng, SimulationLimits limits) {
  QueuePath path(p.d, T);
  simulate_queue_visit(
      p, rates, q0, T, rng, [&](double t, std::span<const std::int64_t> q) { path.push(t, q); }, limits);
  return path;
}

SamplePath simulate_queue_on_grid(const ModelParams& p, const DerivedRates& rates, const QueueState& q0,
                                  double T, std::span<const double> grid, ReplicaStream& rng) {
  check_grid(grid, T);
  SamplePath out(std::vector<double>(grid.begin(), grid.end()), p.d);
  std::vector<std::int64_t> current = q0.q;
  std::size_t g = 0;
  auto flush_before = [&](double t) {
    for (; g < grid.size() && grid[g] < t; ++g) {
      for (std::size_t i = 0; i < p.d; ++i) out.at(g, i) = static_cast<double>(current[i]);
    }
  };
  simulate_queue_visit(
      p, rates, q0, T, rng,
      [&](double t, std::span<const std::int64_t> q) {
        flush_before(t);
        std::copy(q.begin(), q.end(), current.begin());
      },
      SimulationLimits{UINT64_MAX});
  flush_before(std::numeric_limits<double>::infinity());
  return out;
}

SamplePath sample_on_grid(const QueuePath& path, std::span<const double> grid) {
  check_grid(grid, path.horizon());
  SamplePath out(std::vector<double>(grid.begin(), grid.end()), path.dim());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto q = path.state(path.index_at(grid[g]));
    for (std::size_t i = 0; i < path.dim(); ++i) out.at(g, i) = static_cast<double>(q[i]);
  }
  return out;
}

SamplePath scale(const SamplePath& queue_samples, const ModelParams& p, const Centering& centering) {
  if (queue_samples.dim() != p.d) throw ConfigError("scale: dimension mismatch");
  const DerivedRates rates = derive_rates(p);
  const double sqrt_n = std::sqrt(static_cast<double>(p.n));
  SamplePath out = queue_samples;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double c = centering ? centering(out.times()[k]) : 1.0;
    for (std::size_t i = 0; i < p.d; ++i) {
      out.at(k, i) = (queue_samples.at(k, i) - rates.centering[i] * c) / sqrt_n;
    }
  }
  return out;
}

SamplePath scale(const QueuePath& path, const ModelParams& p, const Centering& centering) {
  SamplePath raw(path.times(), path.dim());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto q = path.state(k);
    for (std::size_t i = 0; i < path.dim(); ++i) raw.at(k, i) = static_cast<double>(q[i]);
  }
  return scale(raw, p, centering);
}

namespace {

std::vector<double> checked_eval(const VectorFn& f, std::span<const double> x, double t) {
  std::vector<double> v = f(x);
  for (double e : v) {
    if (!std::isfinite(e)) throw NumericError("functional_integral: non-finite f value at t=" + std::to_string(t));
  }
  return v;
}

}  // namespace

SamplePath functional_integral(const QueuePath& path, const VectorFn& f, const ModelParams& p,
                               std::span<const double> grid) {
  check_grid(grid, path.horizon());
  const SamplePath x = scale(path, p);
  const std::size_t events = path.size();

  std::vector<double> fk = checked_eval(f, x.state(0), 0.0);
  const std::size_t m = fk.size();
  SamplePath out(std::vector<double>(grid.begin(), grid.end()), m);
  std::vector<double> y(m, 0.0);
  std::size_t k = 0;
  double t_cur = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double tg = grid[g];
    while (k + 1 < events && path.times()[k + 1] <= tg) {
      const double t_next = path.times()[k + 1];
      for (std::size_t j = 0; j < m; ++j) y[j] += fk[j] * (t_next - t_cur);
      t_cur = t_next;
      ++k;
      fk = checked_eval(f, x.state(k), t_cur);
      if (fk.size() != m) throw ConfigError("functional_integral: f changed output dimension");
    }
    for (std::size_t j = 0; j < m; ++j) out.at(g, j) = y[j] + fk[j] * (tg - t_cur);
  }
  return out;
}

SamplePath functional_integral(const SamplePath& path, const VectorFn& f) {
  std::vector<double> fk = checked_eval(f, path.state(0), path.times()[0]);
  const std::size_t m = fk.size();
  SamplePath out(path.times(), m);
  std::vector<double> y(m, 0.0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double dt = path.times()[k] - path.times()[k - 1];
    for (std::size_t j = 0; j < m; ++j) {
      y[j] += fk[j] * dt;
      out.at(k, j) = y[j];
    }
    if (k + 1 < path.size()) {
      fk = checked_eval(f, path.state(k), path.times()[k]);
      if (fk.size() != m) throw ConfigError("functional_integral: f changed output dimension");
    }
  }
  return out;
}

}  // namespace diffapprox
