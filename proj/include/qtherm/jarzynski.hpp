#pragma once

// Work-path sampling over per-station reaction-coordinate distributions and
// the exponential-average (Jarzynski) free-energy estimator
//
//   exp(-beta dF) = < exp(-beta W) >,  W = sum_i [U(x_i, l_{i+1}) - U(x_i, l_i)],
//
// with every x_i drawn independently from the station's distribution f_i.

#include "qtherm/distribution.hpp"
#include "qtherm/lattice.hpp"
#include "qtherm/oscillator.hpp"
#include "qtherm/protocol.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qtherm::jarzynski {

inline constexpr std::size_t kDefaultPaths = 100'000;
/// Paths per random substream. Fixed so that results do not depend on the
/// number of worker threads.
inline constexpr std::size_t kPathsPerBlock = 4096;
/// Profiles whose effective sample size drops below this are flagged.
inline constexpr double kMinEffectiveSamples = 10.0;

struct WorkDistribution {
  std::vector<double> samples;
  double mean = 0.0;
  double stddev = 0.0;

  [[nodiscard]] std::size_t count() const noexcept { return samples.size(); }
  [[nodiscard]] static WorkDistribution from_samples(std::vector<double> samples);
};

/// Work done on the system at one station when lambda jumps from `from` to
/// `to` with the reaction coordinate at x.
using Increment = std::function<double(double x, double from, double to)>;

/// k/2 [(x - to)^2 - (x - from)^2]
[[nodiscard]] double oscillator_increment(double x, double from, double to, double stiffness);

/// V N_b [(to^2 - from^2) - 2 x (to - from)], the change of V sum_k n_k (k - lambda)^2
/// for a centre of mass x.
[[nodiscard]] double lattice_increment(double x, double from, double to, double trap, int particles);

/// V N_b dl sum_i (2 lambda_i + dl - 2 x_i) over the s-1 stations of `protocol`.
[[nodiscard]] double lattice_work(std::span<const double> xs, const QuenchProtocol& protocol, double trap,
                                  int particles);

struct SamplerOptions {
  std::size_t n_paths = kDefaultPaths;
  std::uint64_t seed = 0;
  unsigned threads = 0; ///< 0 = hardware concurrency
};

/// Cumulative work along every sampled path: partial(m, i) is the work
/// after the first i + 1 stations of path m.
struct WorkPaths {
  std::size_t n_paths = 0;
  std::size_t steps = 0;
  std::vector<double> partial; ///< row-major n_paths x steps

  [[nodiscard]] double at(std::size_t path, std::size_t step) const { return partial[path * steps + step]; }
  [[nodiscard]] WorkDistribution after(std::size_t step) const;
};

/// `lambdas` holds the s station values; dists[i] is the distribution at
/// lambdas[i] for i < s - 1.
[[nodiscard]] WorkPaths sample_work_matrix(std::span<const PositionDistribution> dists,
                                           std::span<const double> lambdas, const Increment& increment,
                                           const SamplerOptions& options);

/// Total work of each path.
[[nodiscard]] WorkDistribution sample_work_paths(std::span<const PositionDistribution> dists,
                                                 std::span<const double> lambdas, const Increment& increment,
                                                 const SamplerOptions& options);

/// -1/beta ln[(1/M) sum exp(-beta W_m)], evaluated around the smallest work.
[[nodiscard]] double free_energy_estimate(std::span<const double> works, double beta);
[[nodiscard]] double free_energy_estimate(const WorkDistribution& works, double beta);

/// (sum w)^2 / sum w^2 with w = exp(-beta W).
[[nodiscard]] double effective_sample_size(std::span<const double> works, double beta);

/// Delete-one jackknife standard error of free_energy_estimate.
[[nodiscard]] double jackknife_error(std::span<const double> works, double beta);

struct FreeEnergyProfile {
  std::vector<double> lambdas;
  std::vector<double> delta_f; ///< dF(lambda_1, lambda_i)
  std::vector<double> target;  ///< exact F(lambda_i) - F(lambda_1) of the model
  std::vector<double> work_std;
  std::vector<double> ess;
  std::vector<double> jackknife;
  bool undersampled = false;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const noexcept { return lambdas.size(); }
};

/// Free-energy profile from sampled paths: station 1 is 0 by construction,
/// station i + 1 uses the partial work through station i. `total_work`, if
/// given, receives the full-path work samples.
[[nodiscard]] FreeEnergyProfile build_profile(std::span<const PositionDistribution> dists,
                                              const QuenchProtocol& protocol, const Increment& increment,
                                              const std::function<double(double)>& target, double beta,
                                              const SamplerOptions& options,
                                              WorkDistribution* total_work = nullptr);

struct OscillatorRun {
  FreeEnergyProfile profile;
  std::vector<PositionDistribution> distributions; ///< stations 1..s-1
  WorkDistribution total_work;
  double quench_strength = 0.0;
};

[[nodiscard]] OscillatorRun oscillator_profile(const oscillator::OscillatorParams& params,
                                               const QuenchProtocol& protocol, double beta,
                                               const SamplerOptions& options, std::size_t grid_points = 4001,
                                               double tail_tol = oscillator::kDefaultTailTolerance);

struct LatticeRun {
  FreeEnergyProfile profile;
  std::vector<lattice::TimeSeries> series;          ///< stations 1..s-1
  std::vector<PositionDistribution> distributions;  ///< time-averaged histograms
  WorkDistribution total_work;
};

[[nodiscard]] LatticeRun lattice_profile(const lattice::LatticeParams& params, const QuenchProtocol& protocol,
                                         double beta, const SamplerOptions& options,
                                         const lattice::EvolutionOptions& evolution = {},
                                         std::size_t bins = 50);

} // namespace qtherm::jarzynski
