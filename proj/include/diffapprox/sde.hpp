#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diffapprox/model.hpp"
#include "diffapprox/parallel.hpp"
#include "diffapprox/path.hpp"
#include "diffapprox/rng.hpp"
#include "diffapprox/simd/kernels.hpp"

namespace diffapprox {

// Writes a d-vector coefficient evaluated at (t, x) into out.
using CoeffFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// Diagonal-noise SDE dx = drift(t, x) dt + diffusion(t, x) (.) dw.
/// Both callbacks must be pure; ensembles call them from several threads.
struct SdeSpec {
  std::size_t dim = 0;
  CoeffFn drift;
  CoeffFn diffusion;  // standard deviations, >= 0
  std::string label;
};

// q_t = 1 + (gamma - 1) e^{-t}.
double centering_multiplier(double gamma, double t);

/// Routed drift mu0 delta_i(x) + mu_i - x_i with diffusion levels that switch at
/// x_i = nu_i. Covers the limit SDE (no gamma) and the alternative-scaling limits.
class LimitFamily {
 public:
  explicit LimitFamily(ModelParams p, std::optional<double> gamma = std::nullopt);

  const ModelParams& params() const noexcept { return p_; }
  std::optional<double> gamma() const noexcept { return gamma_; }
  bool time_dependent() const noexcept { return gamma_.has_value(); }

  // Standard deviation per coordinate below and at/above the threshold nu_i.
  void levels(double t, std::span<double> below, std::span<double> above) const;

  SdeSpec spec() const;

 private:
  ModelParams p_;
  std::optional<double> gamma_;
};

SdeSpec limit_sde(const ModelParams& p);
// gamma in [0, 1): sigma_i^2 = (1 + q_t) / alpha_i; gamma > 1: (1 + 2 q_t) / alpha_i.
SdeSpec alt_scaling_sde(const ModelParams& p, double gamma);

// Euler-Maruyama node times: t_k = k h for k < K = ceil(T / h), t_K = T.
std::vector<double> em_times(double T, double h);

// All EM nodes.
SamplePath euler_maruyama(const SdeSpec& spec, std::span<const double> x0, double T, double h,
                          ReplicaStream& rng);
// Value at each grid time is the latest EM node at or before it.
SamplePath euler_maruyama(const SdeSpec& spec, std::span<const double> x0, double T, double h,
                          ReplicaStream& rng, std::span<const double> grid);

struct EmEnsembleOptions {
  simd::Isa isa = simd::active_isa();
  std::size_t block = 64;
  Schedule schedule;  // over blocks
};

// Invoked once per replica, possibly concurrently for distinct replica indices.
using PathSink = std::function<void(std::size_t replica, const SamplePath& path)>;

/// Integrates M replicas of `family` in SIMD blocks. Replica k draws from
/// ReplicaStream::for_replica(master_seed, k) and its recorded path equals
/// euler_maruyama(family.spec(), x0, T, h, stream_k, grid) bit for bit.
void euler_maruyama_ensemble(const LimitFamily& family, std::span<const double> x0, double T, double h,
                             std::span<const double> grid, std::size_t M, std::uint64_t master_seed,
                             const PathSink& sink, const EmEnsembleOptions& options = {});

struct FluidParams {
  std::vector<double> beta;
  std::vector<double> q0;
};

// Classical RK4 for dq = (beta - q) dt on a uniform grid of ceil(T / h) steps.
SamplePath fluid_ode(const FluidParams& fp, double T, double h);
std::vector<double> fluid_exact(const FluidParams& fp, double t);

}  // namespace diffapprox
