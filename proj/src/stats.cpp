#include "diffapprox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace diffapprox {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) {
  return splitmix64_mix(master_seed ^ splitmix64_mix(salt + 0x9E3779B97F4A7C15ULL));
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_distance: samples must be nonempty");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

KsReport ks_per_coordinate(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_distance: samples must be nonempty");
  const std::size_t d = a.front().size();
  KsReport out;
  std::vector<double> ca(a.size()), cb(b.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < a.size(); ++k) ca[k] = a[k].at(i);
    for (std::size_t k = 0; k < b.size(); ++k) cb[k] = b[k].at(i);
    out.per_coordinate.push_back(ks_distance(ca, cb));
    out.max = std::max(out.max, out.per_coordinate.back());
  }
  return out;
}

double ks_noise_floor(std::size_t m, std::size_t n) {
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return 1.36 * std::sqrt((dm + dn) / (dm * dn));
}

std::span<const double> default_probabilities() {
  static constexpr double kProbs[] = {0.05, 0.25, 0.5, 0.75, 0.95};
  return kProbs;
}

Summary summarize(const std::vector<std::vector<double>>& samples, std::span<const double> probabilities) {
  const std::size_t M = samples.size();
  if (M < 2) throw ConfigError("summarize: need at least 2 replicas for a variance");
  const std::size_t d = samples.front().size();
  const double dM = static_cast<double>(M);
  Summary s;
  s.M = M;
  s.probabilities.assign(probabilities.begin(), probabilities.end());
  s.quantiles.assign(probabilities.size(), std::vector<double>(d));
  std::vector<double> col(M);
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      col[k] = samples[k].at(i);
      sum += col[k];
    }
    const double mean = sum / dM;
    double m2 = 0.0, m4 = 0.0;
    for (double v : col) {
      const double c = (v - mean) * (v - mean);
      m2 += c;
      m4 += c * c;
    }
    const double var = m2 / (dM - 1.0);
    const double mu4 = m4 / dM;
    const double var_of_var = std::max(0.0, (mu4 - (dM - 3.0) / (dM - 1.0) * var * var) / dM);
    s.mean.push_back(mean);
    s.variance.push_back(var);
    s.std_error.push_back(std::sqrt(var / dM));
    s.variance_std_error.push_back(std::sqrt(var_of_var));
    std::sort(col.begin(), col.end());
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
      const double rank = std::ceil(probabilities[j] * dM);
      const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, dM - 1.0));
      s.quantiles[j][i] = col[idx];
    }
  }
  return s;
}

double occupation_near_G(const SamplePath& path, const ModelParams& p, double eps, simd::Isa isa) {
  if (!(eps > 0.0)) throw ConfigError("eps: must be > 0");
  if (path.dim() != p.d) throw ConfigError("occupation_near_G: dimension mismatch");
  const std::size_t K = path.size() - 1;
  if (K == 0) return distance_to_G(path.state(0), p) < eps ? 1.0 : 0.0;
  const double span_T = path.horizon() - path.times().front();
  if (path.uniform()) {
    simd::NearGArgs args;
    args.d = p.d;
    args.count = K;
    args.stride = path.size();
    args.x = path.coord(0).data();
    args.alpha = p.alpha.data();
    args.nu = p.nu.data();
    args.eps = eps;
    return static_cast<double>(simd::count_near_G(isa, args)) / static_cast<double>(K);
  }
  double inside = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (distance_to_G(path.state(k), p) < eps) inside += path.times()[k + 1] - path.times()[k];
  }
  return inside / span_T;
}

double occupation_near_G(const QueuePath& path, const ModelParams& p, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps: must be > 0");
  const SamplePath x = scale(path, p);
  const double T = path.horizon();
  double inside = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double end = k + 1 < path.size() ? path.times()[k + 1] : T;
    if (distance_to_G(x.state(k), p) < eps) inside += end - path.times()[k];
  }
  return inside / T;
}

// ---------------------------------------------------------------------------

PlateauValue plateau(double r, double R0) {
  if (r <= R0) return {1.0, 0.0, 0.0};
  if (r >= 2.0 * R0) return {0.0, 0.0, 0.0};
  const double z = (r - R0) / R0;
  const double smooth = z * z * z * (10.0 - 15.0 * z + 6.0 * z * z);
  const double d1 = 30.0 * z * z * (1.0 - z) * (1.0 - z) / R0;
  const double d2 = 60.0 * z * (1.0 - z) * (1.0 - 2.0 * z) / (R0 * R0);
  return {1.0 - smooth, -d1, -d2};
}

TestFunction constant_test_function(double c) {
  return {"const", [c](double, std::span<const double> x, TestFunctionValue& out) {
            out.u = c;
            out.u_t = 0.0;
            out.u_x.assign(x.size(), 0.0);
            out.u_xx.assign(x.size(), 0.0);
          }};
}

TestFunction plateau_monomial(std::vector<int> powers, int time_power, double R0) {
  if (time_power != 0 && time_power != 1) throw ConfigError("test function: time power must be 0 or 1");
  if (!(R0 > 0.0)) throw ConfigError("R0: must be > 0");
  std::string id;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (powers[i] < 0) throw ConfigError("test function: negative power");
    if (powers[i] == 0) continue;
    if (!id.empty()) id += "*";
    id += "x" + std::to_string(i + 1);
    if (powers[i] > 1) id += "^" + std::to_string(powers[i]);
  }
  if (id.empty()) id = "1";
  if (time_power == 1) id += "*t";

  auto eval = [powers = std::move(powers), time_power, R0](double t, std::span<const double> x,
                                                           TestFunctionValue& out) {
    const std::size_t d = x.size();
    auto ipow = [](double v, int k) {
      double out = 1.0;
      for (int j = 0; j < k; ++j) out *= v;
      return out;
    };
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    const PlateauValue beta = plateau(r, R0);

    double poly = 1.0;
    for (std::size_t i = 0; i < d; ++i) poly *= ipow(x[i], powers[i]);
    const double psi = time_power == 1 ? t : 1.0;
    const double dpsi = time_power == 1 ? 1.0 : 0.0;

    out.u = poly * beta.value * psi;
    out.u_t = poly * beta.value * dpsi;
    out.u_x.assign(d, 0.0);
    out.u_xx.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double others = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        if (j != i) others *= ipow(x[j], powers[j]);
      const int k = powers[i];
      const double p_i = k >= 1 ? k * ipow(x[i], k - 1) * others : 0.0;
      const double p_ii = k >= 2 ? k * (k - 1) * ipow(x[i], k - 2) * others : 0.0;
      double b_i = 0.0, b_ii = 0.0;
      if (beta.d1 != 0.0 || beta.d2 != 0.0) {
        const double xr = x[i] / r;
        b_i = beta.d1 * xr;
        b_ii = beta.d2 * xr * xr + beta.d1 * (1.0 - xr * xr) / r;
      }
      out.u_x[i] = psi * (p_i * beta.value + poly * b_i);
      out.u_xx[i] = psi * (p_ii * beta.value + 2.0 * p_i * b_i + poly * b_ii);
    }
  };
  return {id, eval};
}

std::vector<TestFunction> test_function_family(std::size_t d, double R0) {
  std::vector<std::vector<int>> monomials;
  monomials.emplace_back(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<int> m(d, 0);
    m[i] = 1;
    monomials.push_back(m);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      std::vector<int> m(d, 0);
      m[i] += 1;
      m[j] += 1;
      monomials.push_back(m);
    }
  }
  std::vector<TestFunction> family;
  for (int tp : {0, 1}) {
    for (const auto& m : monomials) family.push_back(plateau_monomial(m, tp, R0));
  }
  return family;
}

CoeffSource limit_coefficients(const ModelParams& p) {
  return [p](double, std::span<const double> x, std::span<double> drift, std::span<double> qv) {
    const Vec b = limit_drift(x, p);
    const Vec a = limit_qv_density(x, p);
    std::copy(b.begin(), b.end(), drift.begin());
    std::copy(a.begin(), a.end(), qv.begin());
  };
}

CoeffSource prelimit_coefficients(const ModelParams& p) {
  return [p](double, std::span<const double> x, std::span<double> drift, std::span<double> qv) {
    const PrelimitCoeffs c = prelimit_coeffs(x, p);
    std::copy(c.drift.begin(), c.drift.end(), drift.begin());
    std::copy(c.qv_density.begin(), c.qv_density.end(), qv.begin());
  };
}

CoeffSource sde_coefficients(const SdeSpec& spec) {
  return [spec](double t, std::span<const double> x, std::span<double> drift, std::span<double> qv) {
    spec.drift(t, x, drift);
    spec.diffusion(t, x, qv);
    for (double& v : qv) v = v * v;
  };
}

namespace {

std::size_t snap(const std::vector<double>& grid, double t, bool& snapped) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  std::size_t idx;
  if (it == grid.end()) {
    idx = grid.size() - 1;
  } else if (it == grid.begin()) {
    idx = 0;
  } else {
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    idx = (t - grid[hi - 1] <= grid[hi] - t) ? hi - 1 : hi;
  }
  const double scale = std::max(1.0, std::abs(t));
  if (std::abs(grid[idx] - t) > 1e-9 * scale) snapped = true;
  return idx;
}

}  // namespace

ResidualReport martingale_residual(std::span<const SamplePath> paths, const TestFunction& u,
                                   const CoeffSource& coeffs, double s, double t,
                                   const std::optional<MarginalWeight>& weight) {
  if (paths.empty()) throw ConfigError("martingale_residual: empty ensemble");
  if (!(s <= t)) throw ConfigError("martingale_residual: need s <= t");
  if (weight && weight->time > s) throw ConfigError("martingale_residual: weight time must be <= s");
  const std::vector<double>& grid = paths.front().times();
  const std::size_t d = paths.front().dim();

  ResidualReport rep;
  rep.test_function_id = u.id;
  rep.M = paths.size();
  const std::size_t ks = snap(grid, s, rep.snapped);
  const std::size_t kt = snap(grid, t, rep.snapped);
  std::optional<std::size_t> kw;
  if (weight) kw = snap(grid, weight->time, rep.snapped);
  if (rep.snapped) rep.warnings.push_back("s/t snapped to grid nodes " + std::to_string(grid[ks]) + ", " +
                                          std::to_string(grid[kt]));

  std::vector<double> values(paths.size());
  std::vector<double> b(d), a(d);
  TestFunctionValue val;
  auto generator = [&](std::size_t k, const std::vector<double>& x) {
    u.eval(grid[k], x, val);
    coeffs(grid[k], x, b, a);
    double gen = val.u_t;
    for (std::size_t i = 0; i < d; ++i) gen += 0.5 * a[i] * val.u_xx[i] + b[i] * val.u_x[i];
    return gen;
  };

  for (std::size_t m = 0; m < paths.size(); ++m) {
    const SamplePath& path = paths[m];
    if (path.size() != grid.size() || path.dim() != d) {
      throw ConfigError("martingale_residual: paths must share one grid");
    }
    double integral = 0.0;
    std::vector<double> x = path.state(ks);
    double prev = generator(ks, x);
    for (std::size_t k = ks; k < kt; ++k) {
      x = path.state(k + 1);
      const double next = generator(k + 1, x);
      integral += 0.5 * (prev + next) * (grid[k + 1] - grid[k]);
      prev = next;
    }
    u.eval(grid[kt], path.state(kt), val);
    const double u_t = val.u;
    u.eval(grid[ks], path.state(ks), val);
    const double u_s = val.u;
    const double w = weight ? weight->fn(path.state(*kw)) : 1.0;
    values[m] = w * (u_t - u_s - integral);
  }

  double sum = 0.0;
  for (double v : values) sum += v;
  const double M = static_cast<double>(values.size());
  rep.estimate = sum / M;
  if (values.size() >= 2) {
    double m2 = 0.0;
    for (double v : values) m2 += (v - rep.estimate) * (v - rep.estimate);
    rep.std_error = std::sqrt(m2 / (M - 1.0) / M);
  }
  return rep;
}

double slab_ball_volume(std::size_t d, double nu1, double eps, double r) {
  if (d < 1) throw ConfigError("slab_ball_volume: d must be >= 1");
  const double lo = std::max(nu1 - eps, -r);
  const double hi = std::min(nu1 + eps, r);
  if (!(hi > lo)) return 0.0;
  if (d == 1) return hi - lo;
  // x_1 = r sin(theta); the cross-section is a (d-1)-ball of radius r cos(theta).
  const double k = static_cast<double>(d - 1);
  const double unit_ball = std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0);
  const double th0 = std::asin(lo / r), th1 = std::asin(hi / r);
  const int intervals = 2000;
  const double step = (th1 - th0) / intervals;
  auto f = [&](double th) { return std::pow(std::cos(th), static_cast<double>(d)); };
  double acc = f(th0) + f(th1);
  for (int j = 1; j < intervals; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * f(th0 + j * step);
  return unit_ball * std::pow(r, static_cast<double>(d)) * acc * step / 3.0;
}

KrylovReport krylov_ratio(std::span<const SamplePath> paths, const ModelParams& p, double eps, double r,
                          double T) {
  if (paths.empty()) throw ConfigError("krylov_ratio: empty ensemble");
  if (!(eps > 0.0) || !(r > 0.0)) throw ConfigError("krylov_ratio: eps and r must be > 0");
  const std::size_t d = p.d;
  const double delta = limit_ellipticity(p).lower;
  const double weight = std::pow(delta, static_cast<double>(d) / static_cast<double>(d + 1));

  KrylovReport rep;
  rep.eps = eps;
  std::vector<double> values(paths.size());
  for (std::size_t m = 0; m < paths.size(); ++m) {
    const SamplePath& path = paths[m];
    const auto& times = path.times();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < path.size() && times[k] < T; ++k) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) r2 += path.at(k, i) * path.at(k, i);
      if (std::sqrt(r2) >= r) break;  // exit from B_r
      if (std::abs(path.at(k, 0) - p.nu[0]) < eps) acc += std::min(times[k + 1], T) - times[k];
    }
    values[m] = weight * acc;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  const double M = static_cast<double>(values.size());
  rep.lhs = sum / M;
  if (values.size() >= 2) {
    double m2 = 0.0;
    for (double v : values) m2 += (v - rep.lhs) * (v - rep.lhs);
    rep.lhs_std_error = std::sqrt(m2 / (M - 1.0) / M);
  }
  const double vol = slab_ball_volume(d, p.nu[0], eps, r);
  rep.rhs = vol > 0.0 ? std::pow(T * vol, 1.0 / static_cast<double>(d + 1)) : 0.0;
  return rep;
}

}  // namespace diffapprox
