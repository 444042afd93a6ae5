#include "diffapprox/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffapprox/errors.hpp"

namespace diffapprox {

double centering_multiplier(double gamma, double t) { return 1.0 + (gamma - 1.0) * std::exp(-t); }

LimitFamily::LimitFamily(ModelParams p, std::optional<double> gamma) : p_(std::move(p)), gamma_(gamma) {
  p_.validate();
  if (gamma_) {
    if (!(*gamma_ >= 0.0) || !std::isfinite(*gamma_)) throw ConfigError("gamma: must be finite and >= 0");
    if (*gamma_ == 1.0) {
      throw ConfigError(
          "gamma: the alternative scaling covers gamma in [0,1) and gamma > 1 only; gamma = 1 is the "
          "standard scaling, use the limit SDE");
    }
  }
}

void LimitFamily::levels(double t, std::span<double> below, std::span<double> above) const {
  for (std::size_t i = 0; i < p_.d; ++i) {
    if (!gamma_) {
      below[i] = std::sqrt(2.0 / p_.alpha[i]);
      above[i] = std::sqrt(3.0 / p_.alpha[i]);
    } else {
      const double q = centering_multiplier(*gamma_, t);
      // Below the pairing regime departures contribute q_t, inside it 2 q_t.
      const double level = *gamma_ < 1.0 ? std::sqrt((1.0 + q) / p_.alpha[i])
                                         : std::sqrt((1.0 + 2.0 * q) / p_.alpha[i]);
      below[i] = level;
      above[i] = level;
    }
  }
}

SdeSpec LimitFamily::spec() const {
  SdeSpec s;
  s.dim = p_.d;
  s.label = gamma_ ? "alt-scaling(gamma=" + std::to_string(*gamma_) + ")" : "limit";
  const LimitFamily self = *this;
  s.drift = [self](double, std::span<const double> x, std::span<double> out) {
    const Vec b = limit_drift(x, self.p_);
    std::copy(b.begin(), b.end(), out.begin());
  };
  s.diffusion = [self](double t, std::span<const double> x, std::span<double> out) {
    const std::size_t d = self.p_.d;
    Vec below(d), above(d);
    self.levels(t, below, above);
    for (std::size_t i = 0; i < d; ++i) out[i] = (x[i] >= self.p_.nu[i]) ? above[i] : below[i];
  };
  return s;
}

SdeSpec limit_sde(const ModelParams& p) { return LimitFamily(p).spec(); }

SdeSpec alt_scaling_sde(const ModelParams& p, double gamma) { return LimitFamily(p, gamma).spec(); }

namespace {

struct EmGrid {
  double T;
  double h;
  std::size_t steps = 0;
  double last_h = 0.0;

  EmGrid(double T_, double h_) : T(T_), h(h_) {
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw ConfigError("T: must be finite and > 0");
    if (!(h_ > 0.0) || !(h_ <= T_)) throw ConfigError("h: must satisfy 0 < h <= T");
    steps = static_cast<std::size_t>(std::ceil(T_ / h_ - 1e-9));
    if (steps == 0) steps = 1;
    last_h = T_ - static_cast<double>(steps - 1) * h_;
  }
  double time(std::size_t k) const { return k == steps ? T : static_cast<double>(k) * h; }
  double step(std::size_t k) const { return k + 1 == steps ? last_h : h; }
};

// Records grid times whose latest EM node is node k (time t_k, next node t_next).
class GridRecorder {
 public:
  GridRecorder(std::span<const double> grid, double T, double h) : grid_(grid), tol_(1e-7 * h) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!(grid[g] >= 0.0) || grid[g] > T + tol_) throw ConfigError("grid: times must lie in [0, T]");
      if (g > 0 && grid[g] < grid[g - 1]) throw ConfigError("grid: times must be nondecreasing");
    }
  }
  template <typename Write>
  void at_node(double t_next, bool last, Write&& write) {
    while (next_ < grid_.size() && (last || grid_[next_] < t_next - tol_)) write(next_++);
  }

 private:
  std::span<const double> grid_;
  double tol_;
  std::size_t next_ = 0;
};

void check_finite(std::span<const double> x, std::size_t step) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("euler_maruyama: non-finite state at step " + std::to_string(step));
  }
}

}  // namespace

std::vector<double> em_times(double T, double h) {
  const EmGrid g(T, h);
  std::vector<double> t(g.steps + 1);
  for (std::size_t k = 0; k <= g.steps; ++k) t[k] = g.time(k);
  return t;
}

namespace {

template <typename OnNode>
void em_integrate(const SdeSpec& spec, std::span<const double> x0, const EmGrid& g, ReplicaStream& rng,
                  OnNode&& on_node) {
  const std::size_t d = spec.dim;
  if (x0.size() != d) throw ConfigError("x0: expected " + std::to_string(d) + " entries");
  std::vector<double> x(x0.begin(), x0.end()), b(d), s(d), z(d);
  check_finite(x, 0);
  on_node(std::size_t{0}, std::span<const double>(x));
  for (std::size_t k = 0; k < g.steps; ++k) {
    const double t = g.time(k);
    const double hk = g.step(k);
    const double sqrt_hk = std::sqrt(hk);
    spec.drift(t, x, b);
    spec.diffusion(t, x, s);
    rng.normals(z);
    for (std::size_t i = 0; i < d; ++i) x[i] = x[i] + (b[i] * hk + s[i] * (sqrt_hk * z[i]));
    check_finite(x, k + 1);
    on_node(k + 1, std::span<const double>(x));
  }
}

}  // namespace

SamplePath euler_maruyama(const SdeSpec& spec, std::span<const double> x0, double T, double h,
                          ReplicaStream& rng) {
  const EmGrid g(T, h);
  SamplePath out(em_times(T, h), spec.dim);
  em_integrate(spec, x0, g, rng, [&](std::size_t k, std::span<const double> x) { out.set_state(k, x); });
  return out;
}

SamplePath euler_maruyama(const SdeSpec& spec, std::span<const double> x0, double T, double h,
                          ReplicaStream& rng, std::span<const double> grid) {
  const EmGrid g(T, h);
  GridRecorder rec(grid, T, h);
  SamplePath out(std::vector<double>(grid.begin(), grid.end()), spec.dim);
  em_integrate(spec, x0, g, rng, [&](std::size_t k, std::span<const double> x) {
    rec.at_node(k < g.steps ? g.time(k + 1) : T, k == g.steps,
                [&](std::size_t slot) { out.set_state(slot, x); });
  });
  return out;
}

void euler_maruyama_ensemble(const LimitFamily& family, std::span<const double> x0, double T, double h,
                             std::span<const double> grid, std::size_t M, std::uint64_t master_seed,
                             const PathSink& sink, const EmEnsembleOptions& options) {
  const ModelParams& p = family.params();
  const std::size_t d = p.d;
  if (x0.size() != d) throw ConfigError("x0: expected " + std::to_string(d) + " entries");
  if (M < 1) throw ConfigError("replicas: must be >= 1");
  const EmGrid g(T, h);
  [[maybe_unused]] const GridRecorder validate_grid(grid, T, h);
  const std::size_t block = std::max<std::size_t>(1, options.block);
  const std::size_t blocks = (M + block - 1) / block;

  auto run_block = [&](std::size_t b) {
    const std::size_t first = b * block;
    const std::size_t L = std::min(block, M - first);
    std::vector<ReplicaStream> streams;
    streams.reserve(L);
    for (std::size_t r = 0; r < L; ++r) streams.push_back(ReplicaStream::for_replica(master_seed, first + r));

    std::vector<double> x(d * L), z(d * L), zr(d), below(d), above(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t r = 0; r < L; ++r) x[i * L + r] = x0[i];
    check_finite(x, 0);

    std::vector<SamplePath> paths(L, SamplePath(std::vector<double>(grid.begin(), grid.end()), d));
    GridRecorder rec(grid, T, h);
    auto record = [&](std::size_t k) {
      rec.at_node(k < g.steps ? g.time(k + 1) : T, k == g.steps, [&](std::size_t slot) {
        for (std::size_t r = 0; r < L; ++r)
          for (std::size_t i = 0; i < d; ++i) paths[r].at(slot, i) = x[i * L + r];
      });
    };
    record(0);

    simd::LimitStepArgs args;
    args.d = d;
    args.lanes = L;
    args.x = x.data();
    args.z = z.data();
    args.alpha = p.alpha.data();
    args.mu = p.mu.data();
    args.nu = p.nu.data();
    args.below = below.data();
    args.above = above.data();
    args.mu0 = p.mu0;
    if (!family.time_dependent()) family.levels(0.0, below, above);

    for (std::size_t k = 0; k < g.steps; ++k) {
      const double t = g.time(k);
      args.h = g.step(k);
      args.sqrt_h = std::sqrt(args.h);
      if (family.time_dependent()) family.levels(t, below, above);
      for (std::size_t r = 0; r < L; ++r) {
        streams[r].normals(zr);
        for (std::size_t i = 0; i < d; ++i) z[i * L + r] = zr[i];
      }
      simd::limit_step(options.isa, args);
      check_finite(x, k + 1);
      record(k + 1);
    }
    for (std::size_t r = 0; r < L; ++r) sink(first + r, paths[r]);
  };

  if (auto failure = parallel_for(blocks, run_block, options.schedule)) {
    std::rethrow_exception(failure->error);
  }
}

SamplePath fluid_ode(const FluidParams& fp, double T, double h) {
  const std::size_t d = fp.beta.size();
  if (fp.q0.size() != d) throw ConfigError("fluid: beta and q0 must have equal length");
  if (!(T > 0.0) || !(h > 0.0) || !(h <= T)) throw ConfigError("fluid: need 0 < h <= T");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(T / h - 1e-9)));
  const double dt = T / static_cast<double>(steps);
  SamplePath out(uniform_grid(T, steps), d);
  std::vector<double> q = fp.q0, k1(d), k2(d), k3(d), k4(d), tmp(d);
  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
    for (std::size_t i = 0; i < d; ++i) dy[i] = fp.beta[i] - y[i];
  };
  out.set_state(0, q);
  for (std::size_t k = 0; k < steps; ++k) {
    rhs(q, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = q[i] + 0.5 * dt * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = q[i] + 0.5 * dt * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = q[i] + dt * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < d; ++i) q[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    out.set_state(k + 1, q);
  }
  return out;
}

std::vector<double> fluid_exact(const FluidParams& fp, double t) {
  std::vector<double> q(fp.beta.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = fp.beta[i] + (fp.q0[i] - fp.beta[i]) * std::exp(-t);
  return q;
}

}  // namespace diffapprox
