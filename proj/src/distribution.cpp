#include "qtherm/distribution.hpp"

#include "qtherm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qtherm {

double PositionDistribution::mass() const {
  double m = 0.0;
  for (const double f : density) m += f;
  return m * bin_width;
}

double PositionDistribution::trapezoid_mass() const {
  if (x.size() < 2) return mass();
  double m = 0.0;
  for (std::size_t j = 1; j < x.size(); ++j) m += 0.5 * (density[j] + density[j - 1]) * (x[j] - x[j - 1]);
  return m;
}

double PositionDistribution::mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) m += x[j] * density[j];
  return m * bin_width / mass();
}

double PositionDistribution::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) v += (x[j] - mu) * (x[j] - mu) * density[j];
  return v * bin_width / mass();
}

void PositionDistribution::validate(double tol) const {
  if (x.empty()) throw ValidationError("position distribution is empty");
  if (x.size() != density.size()) throw ValidationError("position distribution: grid/density size mismatch");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw ValidationError("position distribution: bin width must be positive");
  for (const double f : density)
    if (!std::isfinite(f) || f < 0.0)
      throw ValidationError("position distribution: density must be finite and non-negative");
  const double m = mass();
  if (std::abs(m - 1.0) > tol)
    throw ValidationError("position distribution not normalized: integral = " + std::to_string(m));
}

InverseCdfSampler::InverseCdfSampler(const PositionDistribution& dist) : width_(dist.bin_width) {
  dist.validate();
  const double total = dist.mass();
  double acc = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const double m = dist.density[j] * width_ / total;
    if (m <= 0.0) continue;
    lower_edge_.push_back(dist.x[j] - 0.5 * width_);
    cdf_.push_back(acc);
    cell_mass_.push_back(m);
    acc += m;
  }
  if (cell_mass_.empty()) throw ValidationError("inverse-CDF sampler: distribution has no mass");
}

double InverseCdfSampler::operator()(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t j = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
  const double frac = std::clamp((u - cdf_[j]) / cell_mass_[j], 0.0, 1.0);
  return lower_edge_[j] + frac * width_;
}

std::size_t count_modes(std::span<const double> values, double min_prominence) {
  // Collapse plateaus so that a flat top counts once.
  std::vector<double> v;
  v.reserve(values.size());
  for (const double f : values)
    if (v.empty() || f != v.back()) v.push_back(f);
  if (v.size() < 3) return 0;

  const double top = *std::max_element(v.begin(), v.end());
  const double threshold = min_prominence * top;
  std::size_t modes = 0;
  for (std::size_t j = 1; j + 1 < v.size(); ++j) {
    if (!(v[j] > v[j - 1] && v[j] > v[j + 1])) continue;
    double left_min = v[j];
    for (std::size_t k = j; k-- > 0;) {
      if (v[k] > v[j]) break;
      left_min = std::min(left_min, v[k]);
    }
    double right_min = v[j];
    for (std::size_t k = j + 1; k < v.size(); ++k) {
      if (v[k] > v[j]) break;
      right_min = std::min(right_min, v[k]);
    }
    const double prominence = v[j] - std::max(left_min, right_min);
    if (prominence > 0.0 && prominence >= threshold) ++modes;
  }
  return modes;
}

std::size_t count_modes(const PositionDistribution& dist, double min_prominence) {
  return count_modes(std::span<const double>(dist.density), min_prominence);
}

PositionDistribution histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw ValidationError("histogram: need at least one bin");
  if (!(hi > lo)) throw ValidationError("histogram: empty range");
  if (samples.empty()) throw ValidationError("histogram: no samples");
  PositionDistribution d;
  d.bin_width = (hi - lo) / static_cast<double>(bins);
  d.x.resize(bins);
  d.density.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) d.x[b] = lo + (static_cast<double>(b) + 0.5) * d.bin_width;
  for (const double s : samples) {
    if (!(s >= lo && s < hi)) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>((s - lo) / d.bin_width));
    d.density[b] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(samples.size()) * d.bin_width);
  for (double& f : d.density) f *= norm;
  return d;
}

} // namespace qtherm
