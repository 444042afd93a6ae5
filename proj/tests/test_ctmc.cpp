#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "diffapprox/ctmc.hpp"
#include "diffapprox/errors.hpp"

using namespace diffapprox;

namespace {

ModelParams make(std::size_t d, Vec alpha, double mu0, Vec mu, Vec nu, std::int64_t n) {
  ModelParams p;
  p.d = d;
  p.alpha = std::move(alpha);
  p.mu0 = mu0;
  p.mu = std::move(mu);
  p.nu = std::move(nu);
  p.n = n;
  return p;
}

double departure_mass(const std::vector<Channel>& ch, std::size_t station) {
  double s = 0.0;
  for (const Channel& c : ch) {
    if (c.station == station && c.jump < 0) s += c.rate * -c.jump;
  }
  return s;
}

}  // namespace

TEST_CASE("event channels") {
  DerivedRates r;
  r.lambda0 = 0.0;
  r.lambda = {1.0};
  r.thresholds = {3};
  const Vec alpha{1.0};

  SUBCASE("empty station has no departures") {
    for (const Channel& c : event_rates(QueueState{{0}}, r, alpha)) CHECK(c.jump > 0);
  }
  SUBCASE("pair service above threshold") {
    const auto ch = event_rates(QueueState{{5}}, r, alpha);
    REQUIRE(ch.size() == 3);
    CHECK(ch[1] == Channel{2.0, 0, -2, EventKind::PairDeparture});
    CHECK(ch[2] == Channel{1.0, 0, -1, EventKind::OddSingleton});
    CHECK(departure_mass(ch, 0) == 5.0);
  }
  SUBCASE("single service below threshold") {
    r.thresholds = {10};
    const auto ch = event_rates(QueueState{{4}}, r, alpha);
    REQUIRE(ch.size() == 2);
    CHECK(ch[1] == Channel{4.0, 0, -1, EventKind::SingleDeparture});
  }
}

TEST_CASE("departure rate bookkeeping holds in both regimes") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::int64_t> q(0, 60);
  std::uniform_int_distribution<std::int64_t> thr(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    DerivedRates r;
    r.lambda0 = 2.0;
    r.lambda = {1.0, 1.0, 1.0};
    r.thresholds = {thr(gen), thr(gen), thr(gen)};
    const QueueState s{{q(gen), q(gen), q(gen)}};
    const auto ch = event_rates(s, r, Vec{1.0, 2.0, 0.5});
    for (std::size_t i = 0; i < 3; ++i) CHECK(departure_mass(ch, i) == static_cast<double>(s.q[i]));
    for (const Channel& c : ch) CHECK(c.rate > 0.0);
    // Routed arrival goes to argmin alpha_i Q_i.
    CHECK(ch.front().kind == EventKind::RoutedArrival);
    CHECK(ch.front().station == route(std::span<const std::int64_t>(s.q), Vec{1.0, 2.0, 0.5}));
  }
}

TEST_CASE("absorbing empty network produces no events") {
  const ModelParams p = make(1, {1.0}, 0.0, {0.0}, {0.0}, 1);
  DerivedRates r;
  r.lambda0 = 0.0;
  r.lambda = {0.0};
  r.thresholds = {1};
  ReplicaStream rng(1);
  const QueuePath path = simulate_queue(p, r, QueueState{{0}}, 5.0, rng);
  CHECK(path.size() == 1);
  CHECK(path.state(0)[0] == 0);
  CHECK(path.horizon() == 5.0);
}

TEST_CASE("paths are valid, nonnegative and have small scaled jumps") {
  const ModelParams p = make(2, {1.0, 2.0}, 1.0, {0.5, 0.0}, {0.0, -0.5}, 400);
  const DerivedRates r = derive_rates(p);
  ReplicaStream rng = ReplicaStream::for_replica(42, 0);
  const QueuePath path = simulate_queue(p, r, initial_state(p, Vec{0.0, 0.0}), 2.0, rng);
  REQUIRE(path.size() > 100);
  CHECK(path.times()[0] == 0.0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    CHECK(path.times()[k] > path.times()[k - 1]);
    CHECK(path.times()[k] < 2.0);
    int changed = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto diff = path.state(k)[i] - path.state(k - 1)[i];
      CHECK(path.state(k)[i] >= 0);
      if (diff != 0) {
        ++changed;
        CHECK((diff == 1 || diff == -1 || diff == -2));
      }
    }
    CHECK(changed == 1);
  }
  const SamplePath x = scale(path, p);
  const double bound = 2.0 / std::sqrt(400.0) + 1e-12;
  for (std::size_t k = 1; k < x.size(); ++k) {
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(x.at(k, i) - x.at(k - 1, i)) <= bound);
  }
}

TEST_CASE("simulation is deterministic per replica stream") {
  const ModelParams p = make(2, {1.0, 1.0}, 1.0, {0.5, 0.5}, {0.0, 0.0}, 100);
  const DerivedRates r = derive_rates(p);
  const QueueState q0 = initial_state(p, Vec{0.0, 0.0});
  ReplicaStream a = ReplicaStream::for_replica(9, 3), b = ReplicaStream::for_replica(9, 3),
                c = ReplicaStream::for_replica(9, 4);
  const QueuePath pa = simulate_queue(p, r, q0, 1.0, a);
  CHECK(pa == simulate_queue(p, r, q0, 1.0, b));
  CHECK_FALSE(pa == simulate_queue(p, r, q0, 1.0, c));
}

TEST_CASE("grid sampling mode equals sampling the stored path") {
  const ModelParams p = make(2, {1.0, 3.0}, 2.0, {0.0, 1.0}, {0.5, 0.0}, 200);
  const DerivedRates r = derive_rates(p);
  const QueueState q0 = initial_state(p, Vec{0.3, -0.2});
  const auto grid = uniform_grid(1.5, 300);
  for (std::uint64_t k = 0; k < 5; ++k) {
    ReplicaStream a = ReplicaStream::for_replica(17, k), b = ReplicaStream::for_replica(17, k);
    const SamplePath full = sample_on_grid(simulate_queue(p, r, q0, 1.5, a), grid);
    CHECK(full == simulate_queue_on_grid(p, r, q0, 1.5, grid, b));
  }
}

TEST_CASE("sample_on_grid is right-continuous") {
  QueuePath path(1, 1.0);
  path.push(0.0, std::vector<std::int64_t>{0});
  path.push(0.5, std::vector<std::int64_t>{1});
  CHECK(sample_on_grid(path, std::vector<double>{0.0}).at(0, 0) == 0.0);
  const SamplePath s = sample_on_grid(path, std::vector<double>{0.0, 1.0});
  CHECK(s.at(0, 0) == 0.0);
  CHECK(s.at(1, 0) == 1.0);
  CHECK(sample_on_grid(path, std::vector<double>{0.5}).at(0, 0) == 1.0);
  CHECK(sample_on_grid(path, std::vector<double>{0.4999}).at(0, 0) == 0.0);
  CHECK_THROWS_AS(sample_on_grid(path, std::vector<double>{0.0, 1.5}), ConfigError);
}

TEST_CASE("event cap is a numeric error") {
  const ModelParams p = make(1, {1.0}, 0.0, {0.0}, {0.0}, 100);
  ReplicaStream rng(3);
  CHECK_THROWS_AS(simulate_queue(p, derive_rates(p), QueueState{{100}}, 10.0, rng, SimulationLimits{50}),
                  NumericError);
}

TEST_CASE("scaling") {
  const ModelParams p = make(1, {2.0}, 0.0, {0.0}, {0.0}, 100);
  SamplePath q(std::vector<double>{0.0, 1.0}, 1);
  q.at(0, 0) = 50.0;
  q.at(1, 0) = 60.0;
  const SamplePath x = scale(q, p);
  CHECK(x.at(0, 0) == 0.0);
  CHECK(x.at(1, 0) == doctest::Approx(1.0));

  const ModelParams p1 = make(1, {1.0}, 0.0, {0.0}, {0.0}, 100);
  SamplePath empty(std::vector<double>{0.0}, 1);
  const SamplePath y = scale(empty, p1, [](double t) { return 1.0 - std::exp(-t); });
  CHECK(y.at(0, 0) == 0.0);
}

TEST_CASE("functional integrals") {
  const ModelParams p = make(2, {1.0, 1.0}, 1.0, {0.5, 0.5}, {0.0, 0.0}, 100);
  ReplicaStream rng(21);
  const QueuePath path = simulate_queue(p, derive_rates(p), initial_state(p, Vec{0.0, 0.0}), 1.0, rng);
  const auto grid = uniform_grid(1.0, 10);

  const SamplePath zero = functional_integral(path, [](std::span<const double>) { return Vec{0.0}; }, p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(zero.at(k, 0) == 0.0);

  const SamplePath c = functional_integral(path, [](std::span<const double>) { return Vec{2.5}; }, p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(c.at(k, 0) == doctest::Approx(2.5 * grid[k]).epsilon(1e-12));

  const SamplePath y = functional_integral(
      path, [&](std::span<const double> x) { return delta(x, p.alpha); }, p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(y.at(k, 0) + y.at(k, 1) - grid[k]) <= 1e-12);
  }

  // Left Riemann sums on a grid path.
  SamplePath g(std::vector<double>{0.0, 0.5, 1.0}, 1);
  g.at(0, 0) = 1.0;
  g.at(1, 0) = 3.0;
  g.at(2, 0) = 100.0;
  const SamplePath r = functional_integral(g, [](std::span<const double> x) { return Vec{x[0]}; });
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(1, 0) == 0.5);
  CHECK(r.at(2, 0) == 2.0);

  CHECK_THROWS_AS(functional_integral(g, [](std::span<const double>) { return Vec{NAN}; }), NumericError);
}

TEST_CASE("mean of the total queue relaxes exponentially") {
  // dE[sum Q]/dt = lambda0 + sum lambda_i - E[sum Q] in both service regimes.
  const ModelParams p = make(2, {1.0, 2.0}, 1.0, {0.5, 0.0}, {0.0, 0.0}, 100);
  const DerivedRates r = derive_rates(p);
  const QueueState q0{{80, 70}};
  const double Lambda = r.lambda0 + r.lambda[0] + r.lambda[1];
  const double start = 150.0;
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const std::size_t M = 2000;
  std::vector<double> sum(3, 0.0), sum2(3, 0.0);
  for (std::size_t k = 0; k < M; ++k) {
    ReplicaStream rng = ReplicaStream::for_replica(2024, k);
    const SamplePath s = simulate_queue_on_grid(p, r, q0, 1.0, grid, rng);
    for (std::size_t g = 0; g < 3; ++g) {
      const double tot = s.at(g, 0) + s.at(g, 1);
      sum[g] += tot;
      sum2[g] += tot * tot;
    }
  }
  for (std::size_t g = 1; g < 3; ++g) {
    const double mean = sum[g] / M;
    const double se = std::sqrt((sum2[g] / M - mean * mean) / (M - 1));
    const double exact = Lambda + (start - Lambda) * std::exp(-grid[g]);
    CHECK(std::abs(mean - exact) <= 3.0 * se);
  }
}

TEST_CASE("stationary law without pairing is Poisson") {
  const ModelParams p = make(1, {1.0}, 0.5, {0.5}, {1e12}, 1);
  const DerivedRates r = derive_rates(p);
  const double Lambda = r.lambda0 + r.lambda[0];
  std::map<std::int64_t, double> occupancy;
  double last_t = 0.0;
  std::int64_t last_q = 0;
  const double burn_in = 20.0, T = 20000.0;
  ReplicaStream rng(77);
  simulate_queue_visit(p, r, QueueState{{0}}, T, rng, [&](double t, std::span<const std::int64_t> q) {
    if (t > burn_in) occupancy[last_q] += t - std::max(last_t, burn_in);
    last_t = t;
    last_q = q[0];
  });
  occupancy[last_q] += T - std::max(last_t, burn_in);
  double tv = 0.0, covered = 0.0;
  double pmf = std::exp(-Lambda);
  for (std::int64_t k = 0; k < 60; ++k) {
    const double emp = occupancy.count(k) ? occupancy[k] / (T - burn_in) : 0.0;
    tv += std::abs(emp - pmf);
    covered += pmf;
    pmf *= Lambda / static_cast<double>(k + 1);
  }
  tv = 0.5 * (tv + (1.0 - covered));
  CHECK(tv < 0.02);
}

TEST_CASE("initial state from x0") {
  const ModelParams p = make(2, {1.0, 4.0}, 0.0, {0.0, 0.0}, {0.0, 0.0}, 100);
  CHECK(initial_state(p, Vec{0.0, 0.0}).q == std::vector<std::int64_t>{100, 25});
  CHECK(initial_state(p, Vec{0.5, -100.0}).q == std::vector<std::int64_t>{105, 0});
  CHECK(initial_state(p, Vec{0.0, 0.0}, 0.0).q == std::vector<std::int64_t>{0, 0});
}
