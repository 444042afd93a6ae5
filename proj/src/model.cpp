#include "diffapprox/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diffapprox/errors.hpp"

namespace diffapprox {

namespace {

void check_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                      std::to_string(got));
  }
}

template <typename T>
std::size_t argmin_weighted(std::span<const T> x, std::span<const double> alpha) {
  check_len(x.size(), alpha.size(), "route");
  if (x.empty()) throw ConfigError("route: empty state vector");
  std::size_t best = 0;
  double best_val = alpha[0] * static_cast<double>(x[0]);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double v = alpha[i] * static_cast<double>(x[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

}  // namespace

void ModelParams::validate() const {
  if (d < 1) throw ConfigError("d: must be >= 1");
  if (alpha.size() != d) throw ConfigError("alpha: expected " + std::to_string(d) + " entries");
  if (mu.size() != d) throw ConfigError("mu: expected " + std::to_string(d) + " entries");
  if (nu.size() != d) throw ConfigError("nu: expected " + std::to_string(d) + " entries");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i]))
      throw ConfigError("alpha[" + std::to_string(i) + "]: must be finite and > 0");
    if (!(mu[i] >= 0.0) || !std::isfinite(mu[i]))
      throw ConfigError("mu[" + std::to_string(i) + "]: must be finite and >= 0");
    if (std::isnan(nu[i])) throw ConfigError("nu[" + std::to_string(i) + "]: must not be NaN");
  }
  if (!(mu0 >= 0.0) || !std::isfinite(mu0)) throw ConfigError("mu0: must be finite and >= 0");
  if (n < 1) throw ConfigError("n: must be >= 1");
}

DerivedRates derive_rates(const ModelParams& p) {
  p.validate();
  const double nn = static_cast<double>(p.n);
  const double sqrt_n = std::sqrt(nn);
  DerivedRates r;
  r.lambda0 = p.mu0 * sqrt_n;
  r.lambda.resize(p.d);
  r.thresholds.resize(p.d);
  r.centering.resize(p.d);
  constexpr double kMaxThreshold = 9.0e18;
  for (std::size_t i = 0; i < p.d; ++i) {
    r.centering[i] = nn / p.alpha[i];
    r.lambda[i] = r.centering[i] + p.mu[i] * sqrt_n;
    const double target = r.centering[i] + p.nu[i] * sqrt_n;
    if (target >= kMaxThreshold) {
      r.thresholds[i] = std::numeric_limits<std::int64_t>::max();
    } else {
      r.thresholds[i] = std::max<std::int64_t>(1, std::llround(std::max(target, 0.0)));
    }
  }
  return r;
}

std::size_t route(std::span<const double> x, std::span<const double> alpha) {
  return argmin_weighted(x, alpha);
}

std::size_t route(std::span<const std::int64_t> q, std::span<const double> alpha) {
  return argmin_weighted(q, alpha);
}

Vec delta(std::span<const double> x, std::span<const double> alpha) {
  Vec out(x.size(), 0.0);
  out[route(x, alpha)] = 1.0;
  return out;
}

double pair_factor(double q) {
  if (!(q > 0.0)) return 0.0;
  return (3.0 * std::floor(q / 2.0) + std::floor((q + 1.0) / 2.0)) / q;
}

Vec limit_drift(std::span<const double> x, const ModelParams& p) {
  check_len(x.size(), p.d, "limit_drift");
  const std::size_t k = route(x, p.alpha);
  Vec b(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    const double di = (i == k) ? 1.0 : 0.0;
    b[i] = p.mu0 * di + p.mu[i] - x[i];
  }
  return b;
}

Vec limit_diffusion(std::span<const double> x, const ModelParams& p) {
  check_len(x.size(), p.d, "limit_diffusion");
  Vec s(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    const double ind = (x[i] >= p.nu[i]) ? 1.0 : 0.0;
    s[i] = std::sqrt((2.0 + ind) / p.alpha[i]);
  }
  return s;
}

Vec limit_qv_density(std::span<const double> x, const ModelParams& p) {
  check_len(x.size(), p.d, "limit_qv_density");
  Vec a(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    const double above = (x[i] >= p.nu[i]) ? 1.0 : 0.0;
    a[i] = (1.0 + (1.0 - above) + 2.0 * above) / p.alpha[i];
  }
  return a;
}

PrelimitCoeffs prelimit_coeffs(std::span<const double> x, const ModelParams& p) {
  check_len(x.size(), p.d, "prelimit_coeffs");
  const double nn = static_cast<double>(p.n);
  const double sqrt_n = std::sqrt(nn);
  const double inv_sqrt_n = 1.0 / sqrt_n;
  const std::size_t k = route(x, p.alpha);
  PrelimitCoeffs c{limit_drift(x, p), Vec(p.d)};
  for (std::size_t i = 0; i < p.d; ++i) {
    const double di = (i == k) ? 1.0 : 0.0;
    const double inv_alpha = 1.0 / p.alpha[i];
    const double occupancy = std::max(0.0, x[i] * inv_sqrt_n + inv_alpha);  // Q^i / n
    const double service = (x[i] < p.nu[i]) ? 1.0 : pair_factor(sqrt_n * x[i] + nn * inv_alpha);
    c.qv_density[i] = inv_sqrt_n * p.mu0 * di + inv_alpha + p.mu[i] * inv_sqrt_n + occupancy * service;
  }
  return c;
}

double distance_to_G(std::span<const double> x, const ModelParams& p) {
  check_len(x.size(), p.d, "distance_to_G");
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.d; ++i) {
    dist = std::min(dist, std::abs(x[i] - p.nu[i]));
    for (std::size_t j = i + 1; j < p.d; ++j) {
      dist = std::min(dist, std::abs(p.alpha[i] * x[i] - p.alpha[j] * x[j]));
    }
  }
  return dist;
}

EllipticityBounds limit_ellipticity(const ModelParams& p) {
  const auto [lo, hi] = std::minmax_element(p.alpha.begin(), p.alpha.end());
  return {2.0 / *hi, 3.0 / *lo};
}

}  // namespace diffapprox
