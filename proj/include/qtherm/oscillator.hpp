#pragma once

// Shifted harmonic oscillator
//
//   H(lambda) = p^2/2m + k x^2/2 + k (x - lambda)^2/2
//             = hbar w (a^+ a + 1/2) + k lambda^2/4,   w = sqrt(2k/m),
//
// quenched lambda - dl -> lambda from its ground state. The diagonal
// ensemble is Poissonian in the number states of H(lambda) with mean
// y = m w dl^2 / (8 hbar), which makes entropy and temperature closed-form.

#include "qtherm/distribution.hpp"
#include "qtherm/ensemble.hpp"
#include "qtherm/protocol.hpp"

#include <cstddef>
#include <span>

namespace qtherm::oscillator {

inline constexpr double kDefaultTailTolerance = 1e-12;
inline constexpr int kMaxLevels = 200;

struct OscillatorParams {
  double mass = 1.0;
  double stiffness = 0.5; ///< k of each of the two springs
  double hbar = 1.0;

  [[nodiscard]] double omega() const;
  /// Oscillator length sqrt(hbar / (m w)).
  [[nodiscard]] double length() const;
  [[nodiscard]] double quantum() const { return hbar * omega(); }
  void validate() const;
};

/// y = m w dl^2 / (8 hbar)
[[nodiscard]] double quench_strength(const OscillatorParams& p, double delta_lambda);
/// Inverse of quench_strength (non-negative root).
[[nodiscard]] double delta_lambda_for(const OscillatorParams& p, double y);

/// Poisson diagonal ensemble p_n = e^-y y^n / n! on levels
/// E_n = hbar w (n + 1/2) + k lambda^2 / 4, truncated at the smallest n_max
/// whose tail mass is below `tail_tol` (at most kMaxLevels levels) and
/// renormalized.
[[nodiscard]] DiagonalEnsemble poisson_ensemble(const OscillatorParams& p, double lambda, double delta_lambda,
                                                double tail_tol = kDefaultTailTolerance);

/// S(y) = y - y ln y + e^-y sum_n y^n ln(n!) / n!
[[nodiscard]] double entropy_closed_form(double y);

/// dS/dy = e^-y sum_{n>=0} y^n [ln(n+1) - ln y] / n!
[[nodiscard]] double entropy_slope(double y);

/// T = hbar w / (dS/dy). Throws ValidationError for y <= 0.
[[nodiscard]] double temperature_closed_form(const OscillatorParams& p, double y);

struct BosonReference {
  double temperature = 0.0;
  double entropy = 0.0;
};

/// Canonical single-mode boson with occupation n_bar:
/// T_B = hbar w / ln(1 + 1/n_bar), S_B = (1+n) ln(1+n) - n ln n.
[[nodiscard]] BosonReference boson_reference(const OscillatorParams& p, double n_bar);
[[nodiscard]] BosonReference boson_reference(double n_bar);

/// Normalized oscillator eigenfunctions psi_0..psi_{n_max}(xi) in the
/// dimensionless coordinate xi, by the three-term recurrence
///   psi_{n+1} = sqrt(2/(n+1)) xi psi_n - sqrt(n/(n+1)) psi_{n-1}.
void hermite_functions(double xi, std::span<double> out);

struct UniformGrid {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t points = 4001;

  [[nodiscard]] double spacing() const { return (hi - lo) / static_cast<double>(points - 1); }
};

/// Grid of `points` nodes centred on lambda/2 that covers the turning point
/// of the highest retained level plus six oscillator lengths.
[[nodiscard]] UniformGrid default_grid(const OscillatorParams& p, double lambda, double y,
                                       std::size_t points = 4001,
                                       double tail_tol = kDefaultTailTolerance);

/// f(x) = sum_n p_n |<x|n_lambda>|^2 for the Poisson ensemble with mean y.
/// The grid must reach six oscillator lengths on both sides of lambda/2 and
/// capture all but 1e-4 of the probability; the returned density is
/// rescaled to unit cell mass.
[[nodiscard]] PositionDistribution position_distribution(const OscillatorParams& p, double lambda, double y,
                                                         const UniformGrid& grid,
                                                         double tail_tol = kDefaultTailTolerance);

struct LowTemperatureFreeEnergy {
  double full = 0.0;      ///< target + canonical shift + diagonal-ensemble shift
  double target = 0.0;    ///< k (s-1)^2 dl^2 / 4
  double canonical = 0.0; ///< target + k (s-1) dl^2/4 (1 - hbar w / 2T)
};

/// Low-temperature expansion of the protocol's free-energy change.
[[nodiscard]] LowTemperatureFreeEnergy free_energy_low_T(const OscillatorParams& p, const QuenchProtocol& protocol,
                                                         double temperature);

} // namespace qtherm::oscillator
