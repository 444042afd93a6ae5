#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "diffapprox/ctmc.hpp"
#include "diffapprox/errors.hpp"
#include "diffapprox/model.hpp"
#include "diffapprox/parallel.hpp"
#include "diffapprox/path.hpp"
#include "diffapprox/rng.hpp"
#include "diffapprox/sde.hpp"

namespace diffapprox {

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

template <typename R>
struct Ensemble {
  std::vector<R> replicas;  // replicas[k] came from ReplicaStream::for_replica(master_seed, k)
  std::uint64_t master_seed = 0;
  std::string meta;
};

class ReplicaFailure : public NumericError {
 public:
  ReplicaFailure(std::size_t index, const std::string& what)
      : NumericError("replica " + std::to_string(index) + " failed: " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct EnsembleOptions {
  Schedule schedule;
  std::string meta;
};

/// Runs generator(k, stream_k) for k in [0, M) and stores the results by index.
/// The output depends only on (generator, M, master_seed), never on the schedule.
template <typename Generator>
auto run_ensemble(Generator&& generator, std::size_t M, std::uint64_t master_seed,
                  const EnsembleOptions& options = {})
    -> Ensemble<std::invoke_result_t<Generator&, std::size_t, ReplicaStream&>> {
  using R = std::invoke_result_t<Generator&, std::size_t, ReplicaStream&>;
  if (M < 1) throw ConfigError("replicas: must be >= 1");
  std::vector<std::optional<R>> slots(M);
  auto failure = parallel_for(
      M,
      [&](std::size_t k) {
        ReplicaStream rng = ReplicaStream::for_replica(master_seed, k);
        slots[k].emplace(generator(k, rng));
      },
      options.schedule);
  if (failure) {
    try {
      std::rethrow_exception(failure->error);
    } catch (const std::exception& e) {
      throw ReplicaFailure(failure->index, e.what());
    }
  }
  Ensemble<R> out;
  out.master_seed = master_seed;
  out.meta = options.meta;
  out.replicas.reserve(M);
  for (auto& s : slots) out.replicas.push_back(std::move(*s));
  return out;
}

// Independent sub-seed for a named sub-experiment of one master seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt);

// ---------------------------------------------------------------------------
// Distribution distances and summaries
// ---------------------------------------------------------------------------

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct KsReport {
  std::vector<double> per_coordinate;
  double max = 0.0;
};
KsReport ks_per_coordinate(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

// 95% two-sample KS quantile 1.36 sqrt((m + n) / (m n)).
double ks_noise_floor(std::size_t m, std::size_t n);

struct Summary {
  std::size_t M = 0;
  std::vector<double> mean;
  std::vector<double> variance;           // unbiased
  std::vector<double> std_error;          // sqrt(variance / M)
  std::vector<double> variance_std_error; // large-sample SE of the sample variance
  std::vector<double> probabilities;
  std::vector<std::vector<double>> quantiles;  // quantiles[j][i]: probability j, coordinate i
};

std::span<const double> default_probabilities();

// Nearest-rank quantiles. Requires M >= 2.
Summary summarize(const std::vector<std::vector<double>>& samples,
                  std::span<const double> probabilities = default_probabilities());

// ---------------------------------------------------------------------------
// Occupation of the discontinuity set
// ---------------------------------------------------------------------------

// Fraction of [0, T] (left-endpoint rule on the path nodes) spent within eps of G.
double occupation_near_G(const SamplePath& path, const ModelParams& p, double eps,
                         simd::Isa isa = simd::active_isa());
// Exact sojourn fraction for the scaled piecewise-constant queue path.
double occupation_near_G(const QueuePath& path, const ModelParams& p, double eps);

// ---------------------------------------------------------------------------
// Martingale-problem residuals
// ---------------------------------------------------------------------------

struct TestFunctionValue {
  double u = 0.0;
  double u_t = 0.0;
  std::vector<double> u_x;
  std::vector<double> u_xx;  // diagonal of the Hessian
};

struct TestFunction {
  std::string id;
  std::function<void(double t, std::span<const double> x, TestFunctionValue& out)> eval;
};

// Radial C2 plateau: 1 on |x| <= R0, 0 on |x| >= 2 R0, quintic smoothstep between.
struct PlateauValue {
  double value;
  double d1;  // d/dr
  double d2;  // d^2/dr^2
};
PlateauValue plateau(double r, double R0);

TestFunction constant_test_function(double c);
// u(t, x) = prod_i x_i^{powers_i} * plateau(|x|) * t^{time_power}, time_power in {0, 1}.
TestFunction plateau_monomial(std::vector<int> powers, int time_power, double R0);
// Monomials of total degree <= 2 times psi in {1, t}.
std::vector<TestFunction> test_function_family(std::size_t d, double R0 = 6.0);

// Drift and diagonal quadratic-variation density at (t, x).
using CoeffSource =
    std::function<void(double t, std::span<const double> x, std::span<double> drift, std::span<double> qv)>;
CoeffSource limit_coefficients(const ModelParams& p);
CoeffSource prelimit_coefficients(const ModelParams& p);
// b and sigma^2 of an SDE specification.
CoeffSource sde_coefficients(const SdeSpec& spec);

struct MarginalWeight {
  double time;
  std::function<double(std::span<const double> x)> fn;
};

struct ResidualReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t M = 0;
  std::string test_function_id;
  bool snapped = false;
  std::vector<std::string> warnings;
};

/// Monte Carlo estimate of
///   E f(x_{t1}) [u(t, x_t) - u(s, x_s) - int_s^t (u_p + 1/2 a_ii u_ii + b_i u_i)(p, x_p) dp],
/// trapezoid rule on the shared path grid; s and t are snapped to the nearest nodes.
ResidualReport martingale_residual(std::span<const SamplePath> paths, const TestFunction& u,
                                   const CoeffSource& coeffs, double s, double t,
                                   const std::optional<MarginalWeight>& weight = std::nullopt);

// ---------------------------------------------------------------------------
// Krylov-estimate diagnostic
// ---------------------------------------------------------------------------

struct KrylovReport {
  double eps = 0.0;
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
  double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

// Lebesgue measure of {|x_1 - nu_1| < eps} intersected with the ball of radius r in R^d.
double slab_ball_volume(std::size_t d, double nu1, double eps, double r);

KrylovReport krylov_ratio(std::span<const SamplePath> paths, const ModelParams& p, double eps, double r,
                          double T);

}  // namespace diffapprox
