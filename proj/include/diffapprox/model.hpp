#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace diffapprox {

using Vec = std::vector<double>;

/// Parameters of the load-balanced network with d infinite-server stations.
///
/// alpha are the station costs, mu0 scales the routed ("free") stream, mu
/// the dedicated streams, nu offsets the pairing thresholds and n is the
/// scale parameter sent to infinity.
struct ModelParams {
  std::size_t d = 1;
  Vec alpha{1.0};
  double mu0 = 0.0;
  Vec mu{0.0};
  Vec nu{0.0};
  std::int64_t n = 1;

  // Throws ConfigError naming the offending field, e.g. "alpha[0]".
  void validate() const;
};

/// Arrival rates and integer thresholds induced by ModelParams at scale n.
struct DerivedRates {
  double lambda0 = 0.0;
  Vec lambda;
  std::vector<std::int64_t> thresholds;
  Vec centering;  // n / alpha_i
};

DerivedRates derive_rates(const ModelParams& p);

// Smallest 0-based index minimizing alpha_i * x_i.
std::size_t route(std::span<const double> x, std::span<const double> alpha);
std::size_t route(std::span<const std::int64_t> q, std::span<const double> alpha);

// One-hot vector of route(x, alpha).
Vec delta(std::span<const double> x, std::span<const double> alpha);

// f(q) = (3 floor(q/2) + floor((q+1)/2)) / q for q > 0, else 0.
double pair_factor(double q);

Vec limit_drift(std::span<const double> x, const ModelParams& p);

// Diagonal standard deviations sqrt((2 + 1{x_i >= nu_i}) / alpha_i).
Vec limit_diffusion(std::span<const double> x, const ModelParams& p);

// Diagonal of the limit quadratic-variation density, alpha_i^{-1}(1 + 1{x<nu} + 2*1{x>=nu}).
Vec limit_qv_density(std::span<const double> x, const ModelParams& p);

struct PrelimitCoeffs {
  Vec drift;
  Vec qv_density;  // diagonal of a^n
};

PrelimitCoeffs prelimit_coeffs(std::span<const double> x, const ModelParams& p);

// min(min_i |x_i - nu_i|, min_{i<j} |alpha_i x_i - alpha_j x_j|); zero exactly on G.
double distance_to_G(std::span<const double> x, const ModelParams& p);

// Bounds of sigma_i^2 for the limit SDE: [2 min alpha^{-1}, 3 max alpha^{-1}].
struct EllipticityBounds {
  double lower;
  double upper;
};
EllipticityBounds limit_ellipticity(const ModelParams& p);

}  // namespace diffapprox
