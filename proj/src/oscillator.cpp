#include "qtherm/oscillator.hpp"

#include "qtherm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace qtherm::oscillator {

namespace {

constexpr double kSeriesTolerance = 1e-15;
constexpr double kGridMassTolerance = 1e-4;
constexpr double kGridHalfWidth = 6.0; // oscillator lengths

// log of the Poisson weight e^-y y^n / n!
double log_poisson(double y, int n) {
  return -y + n * std::log(y) - std::lgamma(n + 1.0);
}

// Poisson weights for n = 0..kMaxLevels, truncated at the smallest n_max
// whose tail is below tail_tol.
std::vector<double> truncated_poisson(double y, double tail_tol) {
  if (!(tail_tol > 0.0 && tail_tol <= 1e-6))
    throw ValidationError("poisson truncation tolerance must lie in (0, 1e-6]");
  if (y == 0.0) return {1.0};
  std::vector<double> w(kMaxLevels + 1);
  for (int n = 0; n <= kMaxLevels; ++n) w[n] = std::exp(log_poisson(y, n));
  // Suffix sums give the tail without cancellation.
  std::vector<double> tail(kMaxLevels + 2, 0.0);
  for (int n = kMaxLevels; n >= 0; --n) tail[n] = tail[n + 1] + w[n];
  int n_max = kMaxLevels;
  for (int n = 0; n <= kMaxLevels; ++n) {
    if (tail[n + 1] < tail_tol) {
      n_max = n;
      break;
    }
  }
  w.resize(static_cast<std::size_t>(n_max) + 1);
  return w;
}

} // namespace

double OscillatorParams::omega() const { return std::sqrt(2.0 * stiffness / mass); }

double OscillatorParams::length() const { return std::sqrt(hbar / (mass * omega())); }

void OscillatorParams::validate() const {
  if (!(mass > 0.0) || !(stiffness > 0.0) || !(hbar > 0.0))
    throw ValidationError("oscillator parameters m, k, hbar must all be positive");
}

double quench_strength(const OscillatorParams& p, double delta_lambda) {
  p.validate();
  return p.mass * p.omega() * delta_lambda * delta_lambda / (8.0 * p.hbar);
}

double delta_lambda_for(const OscillatorParams& p, double y) {
  p.validate();
  if (y < 0.0) throw ValidationError("quench strength y must be non-negative");
  return std::sqrt(8.0 * p.hbar * y / (p.mass * p.omega()));
}

DiagonalEnsemble poisson_ensemble(const OscillatorParams& p, double lambda, double delta_lambda, double tail_tol) {
  const double y = quench_strength(p, delta_lambda);
  auto weights = truncated_poisson(y, tail_tol);

  DiagonalEnsemble ens;
  ens.probs = std::move(weights);
  ens.energies.resize(ens.probs.size());
  const double shift = p.stiffness * lambda * lambda / 4.0;
  for (std::size_t n = 0; n < ens.size(); ++n)
    ens.energies[n] = p.quantum() * (static_cast<double>(n) + 0.5) + shift;
  ens.lambda = lambda;
  ens.delta_lambda = delta_lambda;
  std::ostringstream label;
  label << "oscillator lambda=" << lambda << " dlambda=" << delta_lambda;
  ens.label = label.str();
  return renormalize(std::move(ens));
}

double entropy_closed_form(double y) {
  if (y < 0.0) throw ValidationError("entropy_closed_form: y must be non-negative");
  if (y == 0.0) return 0.0;
  double series = 0.0;
  for (int n = 2; n <= 10 * kMaxLevels; ++n) {
    const double lnfact = std::lgamma(n + 1.0);
    const double term = std::exp(log_poisson(y, n)) * lnfact;
    series += term;
    if (n > y && term < kSeriesTolerance) break;
  }
  return y - y * std::log(y) + series;
}

double entropy_slope(double y) {
  if (!(y > 0.0)) throw ValidationError("entropy_slope: y must be positive");
  const double lny = std::log(y);
  double sum = 0.0;
  for (int n = 0; n <= 10 * kMaxLevels; ++n) {
    const double term = std::exp(log_poisson(y, n)) * (std::log(n + 1.0) - lny);
    sum += term;
    if (n > y && std::abs(term) < kSeriesTolerance) break;
  }
  return sum;
}

double temperature_closed_form(const OscillatorParams& p, double y) {
  p.validate();
  if (!(y > 0.0)) throw ValidationError("temperature_closed_form: y must be positive");
  return p.quantum() / entropy_slope(y);
}

BosonReference boson_reference(const OscillatorParams& p, double n_bar) {
  p.validate();
  if (!(n_bar > 0.0)) throw ValidationError("boson_reference: occupation must be positive");
  BosonReference b;
  b.temperature = p.quantum() / std::log1p(1.0 / n_bar);
  b.entropy = (1.0 + n_bar) * std::log1p(n_bar) - n_bar * std::log(n_bar);
  return b;
}

BosonReference boson_reference(double n_bar) { return boson_reference(OscillatorParams{}, n_bar); }

void hermite_functions(double xi, std::span<double> out) {
  if (out.empty()) return;
  const double inv_quartic_pi = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
  double prev = 0.0;
  double cur = inv_quartic_pi * std::exp(-0.5 * xi * xi);
  out[0] = cur;
  for (std::size_t n = 0; n + 1 < out.size(); ++n) {
    const double dn = static_cast<double>(n);
    const double next = std::sqrt(2.0 / (dn + 1.0)) * xi * cur - std::sqrt(dn / (dn + 1.0)) * prev;
    out[n + 1] = next;
    prev = cur;
    cur = next;
  }
}

UniformGrid default_grid(const OscillatorParams& p, double lambda, double y, std::size_t points, double tail_tol) {
  const auto levels = truncated_poisson(y, tail_tol).size();
  const double turning = std::sqrt(2.0 * static_cast<double>(levels) + 1.0);
  const double half = (turning + kGridHalfWidth) * p.length();
  return UniformGrid{lambda / 2.0 - half, lambda / 2.0 + half, points};
}

PositionDistribution position_distribution(const OscillatorParams& p, double lambda, double y,
                                           const UniformGrid& grid, double tail_tol) {
  p.validate();
  if (grid.points < 3 || !(grid.hi > grid.lo)) throw ValidationError("position grid needs >= 3 increasing points");
  const double centre = lambda / 2.0;
  const double ell = p.length();
  if (grid.lo > centre - kGridHalfWidth * ell || grid.hi < centre + kGridHalfWidth * ell)
    throw ValidationError("position grid must span six oscillator lengths around lambda/2");

  const auto weights = truncated_poisson(y, tail_tol);
  std::vector<double> psi(weights.size());

  PositionDistribution d;
  d.bin_width = grid.spacing();
  d.x.resize(grid.points);
  d.density.resize(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double x = grid.lo + static_cast<double>(j) * d.bin_width;
    hermite_functions((x - centre) / ell, psi);
    double f = 0.0;
    for (std::size_t n = 0; n < weights.size(); ++n) f += weights[n] * psi[n] * psi[n];
    d.x[j] = x;
    d.density[j] = f / ell;
  }

  const double m = d.mass();
  if (m < 1.0 - kGridMassTolerance)
    throw ValidationError("position grid too narrow: captured probability " + std::to_string(m));
  for (double& f : d.density) f /= m;
  return d;
}

LowTemperatureFreeEnergy free_energy_low_T(const OscillatorParams& p, const QuenchProtocol& protocol,
                                           double temperature) {
  p.validate();
  if (!(temperature > 0.0)) throw ValidationError("free_energy_low_T: temperature must be positive");
  const double steps = protocol.stations - 1.0;
  const double dl2 = protocol.delta_lambda * protocol.delta_lambda;
  const double per_step = p.stiffness * steps * dl2 / 4.0;
  const double ratio = temperature / p.quantum();

  LowTemperatureFreeEnergy f;
  f.target = p.stiffness * steps * steps * dl2 / 4.0;
  const double canonical_shift = 1.0 - 0.5 / ratio;
  f.canonical = f.target + per_step * canonical_shift;
  f.full = f.target + per_step * (canonical_shift + ratio);
  return f;
}

} // namespace qtherm::oscillator
