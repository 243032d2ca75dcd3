#pragma once

// Hard-core bosons in a shifted harmonic trap on an open chain of N sites,
//
//   H(lambda) = -J sum_k (f_k^+ f_{k+1} + h.c.)
//               + V sum_k n_k (k - a)^2 + V sum_k n_k (k - lambda)^2,
//
// written in Jordan-Wigner fermions f_k. With nearest-neighbour hopping on an
// open chain the string operators cancel, so every many-body quantity
// follows from the single-particle problem: eigenstates are Slater
// determinants and overlaps are determinants of orbital overlap matrices.

#include "qtherm/distribution.hpp"
#include "qtherm/ensemble.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace qtherm::lattice {

struct LatticeParams {
  int sites = 40;
  int particles = 10;
  double hopping = 1.0;
  double trap = 0.0225;
  double center = 13.0;

  void validate() const;
};

/// Tridiagonal one-body matrix in the site basis (sites 1..N map to rows
/// 0..N-1): off-diagonals -J, diagonal V (k-a)^2 + V (k-lambda)^2.
[[nodiscard]] Eigen::MatrixXd one_body_hamiltonian(const LatticeParams& p, double lambda);

struct SingleParticleSpectrum {
  double lambda = 0.0;
  Eigen::VectorXd energies; ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns, site basis
  Eigen::VectorXd diagonal; ///< the tridiagonal h(lambda) it came from
  Eigen::VectorXd off_diagonal;

  [[nodiscard]] int sites() const noexcept { return static_cast<int>(energies.size()); }
  /// Dense h(lambda).
  [[nodiscard]] Eigen::MatrixXd hamiltonian() const;
};

[[nodiscard]] SingleParticleSpectrum diagonalize(const LatticeParams& p, double lambda);

/// Memoizes spectra by lambda for one parameter set. Thread-safe.
class SpectrumCache {
public:
  explicit SpectrumCache(LatticeParams params);

  [[nodiscard]] std::shared_ptr<const SingleParticleSpectrum> get(double lambda);
  [[nodiscard]] const LatticeParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t size() const;

private:
  LatticeParams params_;
  mutable std::mutex mutex_;
  std::map<double, std::shared_ptr<const SingleParticleSpectrum>> spectra_;
};

/// N_b-fermion Slater determinant stored as its N x N_b orbital matrix.
/// `occupied` lists the single-particle levels filled, when the state is an
/// eigenstate of some h(lambda).
struct SlaterState {
  Eigen::MatrixXcd orbitals;
  std::vector<int> occupied;

  [[nodiscard]] int sites() const noexcept { return static_cast<int>(orbitals.rows()); }
  [[nodiscard]] int particles() const noexcept { return static_cast<int>(orbitals.cols()); }
  /// max |(P^+ P - 1)_ab|
  [[nodiscard]] double orthonormality_error() const;
};

/// Slater determinant of the given levels of `spectrum`.
[[nodiscard]] SlaterState eigenstate(const SingleParticleSpectrum& spectrum, const std::vector<int>& levels);

/// Fermi sea of the N_b lowest levels. Throws ValidationError naming the
/// degenerate pair if levels N_b and N_b + 1 are closer than 1e-12.
[[nodiscard]] SlaterState ground_state(const SingleParticleSpectrum& spectrum, int particles);
[[nodiscard]] SlaterState ground_state(const LatticeParams& p, double lambda);

/// |<eigenstate|initial>|^2 = |det(Q^+ P)|^2.
[[nodiscard]] double overlap_probability(const SlaterState& initial, const SlaterState& eigenstate);

/// Site occupations n_k = (P P^+)_kk.
[[nodiscard]] Eigen::VectorXd densities(const SlaterState& state);

/// sum_k k n_k / N_b with sites numbered from 1.
[[nodiscard]] double center_of_mass(const SlaterState& state);

/// Tr(P^+ h P) = <psi|H|psi>.
[[nodiscard]] double energy_expectation(const SlaterState& initial, const Eigen::MatrixXd& h);

struct EnsembleOptions {
  double prob_cutoff = 1e-6;
  std::size_t max_states = 2'000'000;
  /// Give up on an excitation rank with more members than this.
  std::size_t max_rank_size = 20'000'000;
  /// Evaluate every overlap as a full N_b x N_b determinant instead of the
  /// small particle-hole minors.
  bool full_determinants = false;
};

/// Diagonal ensemble of the quench lambda - dl -> lambda together with the
/// bookkeeping needed to rebuild each retained eigenstate.
struct LatticeEnsemble {
  DiagonalEnsemble ensemble;
  std::vector<std::uint64_t> occupations; ///< bit alpha set = level alpha filled
  std::vector<int> ranks;                 ///< particle-hole rank of each state
  double captured_mass = 0.0;             ///< sum of raw p_n before renormalization
  int highest_rank = 0;
};

/// Enumerates eigenstates of H(lambda) in particle-hole rank order above the
/// Fermi sea (singles, doubles, ...), by excitation energy inside a rank, until
/// the captured probability reaches 1 - prob_cutoff or max_states are kept.
/// Throws ConvergenceError if less than 0.99 of the mass is captured.
[[nodiscard]] LatticeEnsemble diagonal_ensemble(const LatticeParams& p, double lambda, double delta_lambda,
                                                const EnsembleOptions& options = {});
[[nodiscard]] LatticeEnsemble diagonal_ensemble(SpectrumCache& cache, double lambda, double delta_lambda,
                                                const EnsembleOptions& options = {});

struct LatticeTemperature {
  TemperatureEstimate estimate;
  double entropy = 0.0; ///< at delta_lambda
  double energy = 0.0;  ///< at delta_lambda
  double captured_mass = 0.0;
  double captured_mass_shifted = 0.0; ///< at delta_lambda + epsilon
};

/// Level indices set in an occupation bit mask.
[[nodiscard]] std::vector<int> occupied_levels(std::uint64_t mask, int sites);

/// Finite-difference temperature from the quenches dl and dl + epsilon that
/// end at the same lambda. A non-positive epsilon selects 0.1 dl.
[[nodiscard]] LatticeTemperature lattice_temperature(const LatticeParams& p, double lambda, double delta_lambda,
                                                     double epsilon = 0.0, const EnsembleOptions& options = {});
[[nodiscard]] LatticeTemperature lattice_temperature(SpectrumCache& cache, double lambda, double delta_lambda,
                                                     double epsilon = 0.0, const EnsembleOptions& options = {});

struct EvolutionOptions {
  double horizon = 0.0; ///< tau in hbar/J; <= 0 selects 2 N^2
  double dt = 0.1;
  /// Permit horizons shorter than N^2.
  bool allow_short = false;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> center_of_mass;
  int sites = 0;
  int particles = 0;
  double max_particle_error = 0.0; ///< max_t |sum_k n_k - N_b|
  double max_energy_drift = 0.0;   ///< max_t |<H>(t) - <H>(0)|
  double max_edge_occupancy = 0.0;
  double max_orthonormality_error = 0.0;
  std::vector<std::string> warnings;

  [[nodiscard]] double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

/// Exact evolution P(t) = U e^{-i D t} U^T P(0) under h = U D U^T, sampling
/// the centre of mass every dt for t in [0, horizon).
[[nodiscard]] TimeSeries evolve_center_of_mass(const SlaterState& initial, const SingleParticleSpectrum& spectrum,
                                               const EvolutionOptions& options = {});

/// State at time t under the same propagation as evolve_center_of_mass.
[[nodiscard]] SlaterState evolve(const SlaterState& initial, const SingleParticleSpectrum& spectrum, double t);

inline constexpr std::size_t kMinTimeSamples = 1000;

/// Time-averaged distribution of x(t): normalized histogram with `bins`
/// equal cells over the observed range padded by 5% on each side. Needs at
/// least kMinTimeSamples samples covering N^2 time units unless
/// `allow_short`.
[[nodiscard]] PositionDistribution time_average_distribution(const TimeSeries& series, std::size_t bins,
                                                             bool allow_short = false);

} // namespace qtherm::lattice
