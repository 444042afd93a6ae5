#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace diffapprox {

/// Real d-vector path observed at increasing times.
///
/// Values are stored coordinate-major: coordinate i occupies
/// values[i * size() .. (i + 1) * size()). Column-wise storage keeps the
/// per-coordinate reductions (KS, occupation counting) contiguous.
class SamplePath {
 public:
  SamplePath() = default;
  SamplePath(std::vector<double> times, std::size_t dim);

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& times() const noexcept { return times_; }

  std::span<double> coord(std::size_t i) { return {values_.data() + i * size(), size()}; }
  std::span<const double> coord(std::size_t i) const { return {values_.data() + i * size(), size()}; }

  double at(std::size_t k, std::size_t i) const { return values_[i * size() + k]; }
  double& at(std::size_t k, std::size_t i) { return values_[i * size() + k]; }

  // Copy of the state at node k.
  std::vector<double> state(std::size_t k) const;
  void set_state(std::size_t k, std::span<const double> x);

  std::vector<double> terminal() const { return state(size() - 1); }
  double horizon() const { return times_.back(); }

  // True when node spacing is constant up to a relative 1e-9.
  bool uniform() const;

  friend bool operator==(const SamplePath&, const SamplePath&) = default;

 private:
  std::vector<double> times_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// t_k = T * k / K for k = 0..K. K = 0 yields the single time {0}.
std::vector<double> uniform_grid(double T, std::size_t K);

}  // namespace diffapprox
