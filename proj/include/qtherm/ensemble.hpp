#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qtherm {

/// Probabilities summing to 1 within this tolerance are accepted as normalized.
inline constexpr double kNormTolerance = 1e-8;

/// Spectrum-side representation of a time-averaged (diagonal) density
/// operator: eigen-energies E_n of the post-quench Hamiltonian together with
/// the occupation probabilities p_n = |<E_n|psi_0>|^2.
struct DiagonalEnsemble {
  std::vector<double> energies;
  std::vector<double> probs;
  std::string label;
  std::optional<double> lambda;       ///< post-quench control parameter
  std::optional<double> delta_lambda; ///< quench amplitude
  /// Probability mass dropped by truncation before the last renormalization.
  double discarded_mass = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
  [[nodiscard]] double total_probability() const noexcept;

  /// Throws ValidationError unless lengths match, every p_n lies in [0, 1]
  /// and the probabilities sum to 1 within `norm_tol`.
  void validate(double norm_tol = kNormTolerance) const;
};

/// Result of the finite-difference temperature construction
///   beta = [S(b) - S(a)] / [E(b) - E(a)].
///
/// A pair that changes the energy but leaves the entropy untouched (both
/// states equally pure) is reported as T = 0 with beta = +inf.
struct TemperatureEstimate {
  double beta = 0.0;
  double temperature = 0.0;
  double dS = 0.0;
  double dE = 0.0;
};

/// Diagonal entropy -sum p ln p (k_B = 1). Zero probabilities contribute 0.
[[nodiscard]] double entropy(const DiagonalEnsemble& ens);

/// sum E_n p_n
[[nodiscard]] double mean_energy(const DiagonalEnsemble& ens);

/// Temperature from two ensembles taken at the same lambda, `b` being the
/// slightly larger quench. Throws DegenerateEnergyError when |dE| < 1e-14
/// while the entropy changes.
[[nodiscard]] TemperatureEstimate temperature_from_pair(const DiagonalEnsemble& a,
                                                        const DiagonalEnsemble& b);

/// Rescales probabilities to unit sum and stores the missing mass in
/// `discarded_mass`. Throws ValidationError if every probability is zero.
[[nodiscard]] DiagonalEnsemble renormalize(DiagonalEnsemble ens);

// Two-column CSV with '#'-prefixed metadata:
//
//   # label: lambda=15, dlambda=1
//   # lambda: 15
//   # delta_lambda: 1
//   # discarded_mass: 3.1e-07
//   energy,probability
//   -3.21,0.655
//   ...
void write_ensemble_csv(std::ostream& out, const DiagonalEnsemble& ens);
[[nodiscard]] DiagonalEnsemble read_ensemble_csv(std::istream& in);

} // namespace qtherm
