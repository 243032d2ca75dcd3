#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qtherm {

/// Normalized density of the reaction coordinate on equally spaced points.
///
/// Each point x[j] stands for the cell [x[j] - w/2, x[j] + w/2) with
/// w = bin_width, so the same type carries a finely gridded analytic density
/// and a histogram (x = bin centres).
struct PositionDistribution {
  std::vector<double> x;
  std::vector<double> density;
  double bin_width = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  /// sum f_j w (cell rule)
  [[nodiscard]] double mass() const;
  /// Trapezoidal integral over the grid points.
  [[nodiscard]] double trapezoid_mass() const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;

  /// Throws ValidationError unless the density is finite, non-negative and
  /// integrates to 1 within `tol`.
  void validate(double tol = 1e-6) const;
};

/// Inverse-CDF sampling from the piecewise-constant density of a
/// PositionDistribution. Inside a cell the draw is uniform.
class InverseCdfSampler {
public:
  explicit InverseCdfSampler(const PositionDistribution& dist);

  /// Maps u in [0, 1) to a coordinate.
  [[nodiscard]] double operator()(double u) const;

private:
  std::vector<double> lower_edge_;
  std::vector<double> cdf_; // cdf_[j] = mass strictly below cell j
  std::vector<double> cell_mass_;
  double width_;
};

/// Number of local maxima whose topographic prominence is at least
/// `min_prominence` times the global maximum. Runs of equal values count as
/// one point; end points are never peaks.
[[nodiscard]] std::size_t count_modes(std::span<const double> values, double min_prominence = 0.0);
[[nodiscard]] std::size_t count_modes(const PositionDistribution& dist, double min_prominence = 0.0);

/// Normalized histogram of `samples` with `bins` equal-width cells on
/// [lo, hi). Values outside the range are dropped from the counts but not
/// from the normalization.
[[nodiscard]] PositionDistribution histogram(std::span<const double> samples, std::size_t bins, double lo,
                                             double hi);

} // namespace qtherm
