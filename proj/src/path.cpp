#include "diffapprox/path.hpp"

#include <algorithm>
#include <cmath>

#include "diffapprox/errors.hpp"

namespace diffapprox {

SamplePath::SamplePath(std::vector<double> times, std::size_t dim)
    : times_(std::move(times)), dim_(dim), values_(times_.size() * dim, 0.0) {
  if (times_.empty()) throw ConfigError("SamplePath: empty time grid");
}

std::vector<double> SamplePath::state(std::size_t k) const {
  std::vector<double> x(dim_);
  for (std::size_t i = 0; i < dim_; ++i) x[i] = at(k, i);
  return x;
}

void SamplePath::set_state(std::size_t k, std::span<const double> x) {
  for (std::size_t i = 0; i < dim_; ++i) at(k, i) = x[i];
}

bool SamplePath::uniform() const {
  if (size() < 3) return true;
  const double step = (times_.back() - times_.front()) / static_cast<double>(size() - 1);
  for (std::size_t k = 1; k < size(); ++k) {
    if (std::abs((times_[k] - times_[k - 1]) - step) > 1e-9 * std::max(step, 1e-300)) return false;
  }
  return true;
}

std::vector<double> uniform_grid(double T, std::size_t K) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("grid: horizon must be finite and >= 0");
  std::vector<double> t(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    t[k] = K == 0 ? 0.0 : T * static_cast<double>(k) / static_cast<double>(K);
  }
  return t;
}

}  // namespace diffapprox
