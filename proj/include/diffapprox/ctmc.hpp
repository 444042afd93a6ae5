#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "diffapprox/model.hpp"
#include "diffapprox/path.hpp"
#include "diffapprox/rng.hpp"

namespace diffapprox {

struct QueueState {
  std::vector<std::int64_t> q;
  friend bool operator==(const QueueState&, const QueueState&) = default;
};

enum class EventKind { RoutedArrival, DedicatedArrival, SingleDeparture, PairDeparture, OddSingleton };

struct Channel {
  double rate;
  std::size_t station;  // 0-based
  int jump;             // +1, -1 or -2
  EventKind kind;
  friend bool operator==(const Channel&, const Channel&) = default;
};

// Positive-rate transitions out of `state`, in a fixed order: routed arrival,
// dedicated arrivals by station, then departures by station.
std::vector<Channel> event_rates(const QueueState& state, const DerivedRates& rates,
                                 std::span<const double> alpha);
void event_rates(const QueueState& state, const DerivedRates& rates, std::span<const double> alpha,
                 std::vector<Channel>& out);

/// Piecewise-constant, right-continuous record of Q_t on [0, horizon].
///
/// Event k happened at times[k] and left the network in state(k); times[0]
/// is 0 and state(0) the initial condition.
class QueuePath {
 public:
  QueuePath(std::size_t d, double horizon) : d_(d), horizon_(horizon) {}

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return times_.size(); }
  double horizon() const noexcept { return horizon_; }
  const std::vector<double>& times() const noexcept { return times_; }

  std::span<const std::int64_t> state(std::size_t k) const { return {states_.data() + k * d_, d_}; }
  // Index of the last event at or before t.
  std::size_t index_at(double t) const;

  void push(double t, std::span<const std::int64_t> q);

  friend bool operator==(const QueuePath&, const QueuePath&) = default;

 private:
  std::size_t d_;
  double horizon_;
  std::vector<double> times_;
  std::vector<std::int64_t> states_;
};

// Q^i_0 = round(n / alpha_i + x0_i sqrt(n)), clamped at 0. gamma scales the centering.
QueueState initial_state(const ModelParams& p, std::span<const double> x0, double gamma = 1.0);

// Called at time 0 with the initial state and after every event with the post-jump state.
using QueueVisitor = std::function<void(double t, std::span<const std::int64_t> q)>;

struct SimulationLimits {
  std::uint64_t event_cap = 100'000'000;
};

// Direct-method SSA on [0, T); returns the number of events.
std::uint64_t simulate_queue_visit(const ModelParams& p, const DerivedRates& rates, const QueueState& q0,
                                   double T, ReplicaStream& rng, const QueueVisitor& visit,
                                   SimulationLimits limits = {});

QueuePath simulate_queue(const ModelParams& p, const DerivedRates& rates, const QueueState& q0, double T,
                         ReplicaStream& rng, SimulationLimits limits = {});

// Same trajectory as sample_on_grid(simulate_queue(...), grid), without storing events.
SamplePath simulate_queue_on_grid(const ModelParams& p, const DerivedRates& rates, const QueueState& q0,
                                  double T, std::span<const double> grid, ReplicaStream& rng);

SamplePath sample_on_grid(const QueuePath& path, std::span<const double> grid);

// Centering multiplier q_t applied to n / alpha_i; unset means q_t = 1.
using Centering = std::function<double(double t)>;

// x_i(t) = (Q_i(t) - n q_t / alpha_i) / sqrt(n).
SamplePath scale(const SamplePath& queue_samples, const ModelParams& p, const Centering& centering = {});
// Scaled states at the event times of `path`.
SamplePath scale(const QueuePath& path, const ModelParams& p, const Centering& centering = {});

using VectorFn = std::function<std::vector<double>(std::span<const double> x)>;

// y_t = int_0^t f(x_s) ds of the scaled queue path x = (Q - n/alpha)/sqrt(n), integrated
// exactly over the piecewise-constant path and reported at the times of `grid`.
SamplePath functional_integral(const QueuePath& path, const VectorFn& f, const ModelParams& p,
                               std::span<const double> grid);
// Left-endpoint Riemann sum over the nodes of `path`.
SamplePath functional_integral(const SamplePath& path, const VectorFn& f);

}  // namespace diffapprox
