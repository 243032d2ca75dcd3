#include "qtherm/jarzynski.hpp"

#include "qtherm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace qtherm::jarzynski {

namespace {

void require_samples(std::span<const double> works, double beta) {
  if (works.empty()) throw ValidationError("free-energy estimate needs at least one work sample");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("free-energy estimate needs finite beta > 0");
}

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

} // namespace

WorkDistribution WorkDistribution::from_samples(std::vector<double> samples) {
  if (samples.empty()) throw ValidationError("work distribution needs at least one sample");
  WorkDistribution w;
  w.samples = std::move(samples);
  const auto m = static_cast<double>(w.samples.size());
  double sum = 0.0;
  for (const double s : w.samples) sum += s;
  w.mean = sum / m;
  double sq = 0.0;
  for (const double s : w.samples) sq += (s - w.mean) * (s - w.mean);
  w.stddev = std::sqrt(sq / m);
  return w;
}

double oscillator_increment(double x, double from, double to, double stiffness) {
  return 0.5 * stiffness * ((x - to) * (x - to) - (x - from) * (x - from));
}

double lattice_increment(double x, double from, double to, double trap, int particles) {
  return trap * particles * ((to * to - from * from) - 2.0 * x * (to - from));
}

double lattice_work(std::span<const double> xs, const QuenchProtocol& protocol, double trap, int particles) {
  if (xs.size() != static_cast<std::size_t>(protocol.stations - 1))
    throw ValidationError("lattice_work: expected " + std::to_string(protocol.stations - 1) +
                          " centre-of-mass values, got " + std::to_string(xs.size()));
  const double dl = protocol.delta_lambda;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    sum += 2.0 * protocol.lambda(static_cast<int>(i) + 1) + dl - 2.0 * xs[i];
  return trap * particles * dl * sum;
}

WorkDistribution WorkPaths::after(std::size_t step) const {
  std::vector<double> w(n_paths);
  for (std::size_t m = 0; m < n_paths; ++m) w[m] = at(m, step);
  return WorkDistribution::from_samples(std::move(w));
}

WorkPaths sample_work_matrix(std::span<const PositionDistribution> dists, std::span<const double> lambdas,
                             const Increment& increment, const SamplerOptions& options) {
  if (options.n_paths < 1) throw ValidationError("sample_work_paths: n_paths must be at least 1");
  if (lambdas.size() < 2 || dists.size() != lambdas.size() - 1)
    throw ValidationError("sample_work_paths: need one distribution per station before the last");

  std::vector<InverseCdfSampler> samplers;
  samplers.reserve(dists.size());
  for (const auto& d : dists) samplers.emplace_back(d); // validates normalization

  WorkPaths paths;
  paths.n_paths = options.n_paths;
  paths.steps = dists.size();
  paths.partial.assign(paths.n_paths * paths.steps, 0.0);

  const std::size_t blocks = (options.n_paths + kPathsPerBlock - 1) / kPathsPerBlock;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t b = next++; b < blocks; b = next++) {
      auto engine = block_engine(options.seed, b);
      const std::size_t end = std::min(options.n_paths, (b + 1) * kPathsPerBlock);
      for (std::size_t m = b * kPathsPerBlock; m < end; ++m) {
        double w = 0.0;
        for (std::size_t i = 0; i < paths.steps; ++i) {
          const double x = samplers[i](uniform(engine));
          w += increment(x, lambdas[i], lambdas[i + 1]);
          paths.partial[m * paths.steps + i] = w;
        }
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return paths;
}

WorkDistribution sample_work_paths(std::span<const PositionDistribution> dists, std::span<const double> lambdas,
                                   const Increment& increment, const SamplerOptions& options) {
  const auto paths = sample_work_matrix(dists, lambdas, increment, options);
  return paths.after(paths.steps - 1);
}

double free_energy_estimate(std::span<const double> works, double beta) {
  require_samples(works, beta);
  const double w_min = *std::min_element(works.begin(), works.end());
  double sum = 0.0;
  for (const double w : works) sum += std::exp(-beta * (w - w_min));
  return w_min - std::log(sum / static_cast<double>(works.size())) / beta;
}

double free_energy_estimate(const WorkDistribution& works, double beta) {
  return free_energy_estimate(std::span<const double>(works.samples), beta);
}

double effective_sample_size(std::span<const double> works, double beta) {
  require_samples(works, beta);
  const double w_min = *std::min_element(works.begin(), works.end());
  double s1 = 0.0;
  double s2 = 0.0;
  for (const double w : works) {
    const double e = std::exp(-beta * (w - w_min));
    s1 += e;
    s2 += e * e;
  }
  return s1 * s1 / s2;
}

double jackknife_error(std::span<const double> works, double beta) {
  require_samples(works, beta);
  const std::size_t m = works.size();
  if (m < 2) return std::numeric_limits<double>::infinity();
  const double w_min = *std::min_element(works.begin(), works.end());
  std::vector<double> e(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += e[i] = std::exp(-beta * (works[i] - w_min));
  const double md = static_cast<double>(m);
  std::vector<double> loo(m);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    // Exact when the dropped sample dominates the sum; fall back to w_min.
    const double rest = std::max(sum - e[i], std::numeric_limits<double>::min());
    loo[i] = w_min - std::log(rest / (md - 1.0)) / beta;
    mean += loo[i];
  }
  mean /= md;
  double var = 0.0;
  for (const double v : loo) var += (v - mean) * (v - mean);
  return std::sqrt((md - 1.0) / md * var);
}

FreeEnergyProfile build_profile(std::span<const PositionDistribution> dists, const QuenchProtocol& protocol,
                                const Increment& increment, const std::function<double(double)>& target,
                                double beta, const SamplerOptions& options, WorkDistribution* total_work) {
  protocol.validate();
  if (!(beta > 0.0)) throw ValidationError("build_profile: beta must be positive");
  const auto lambdas = protocol.lambdas();
  const auto paths = sample_work_matrix(dists, lambdas, increment, options);

  FreeEnergyProfile prof;
  const double f1 = target(lambdas.front());
  prof.lambdas = lambdas;
  prof.delta_f.push_back(0.0);
  prof.target.push_back(0.0);
  prof.work_std.push_back(0.0);
  prof.ess.push_back(static_cast<double>(paths.n_paths));
  prof.jackknife.push_back(0.0);
  for (std::size_t i = 0; i < paths.steps; ++i) {
    const auto w = paths.after(i);
    prof.delta_f.push_back(free_energy_estimate(w, beta));
    prof.target.push_back(target(lambdas[i + 1]) - f1);
    prof.work_std.push_back(w.stddev);
    const double ess = effective_sample_size(w.samples, beta);
    prof.ess.push_back(ess);
    prof.jackknife.push_back(jackknife_error(w.samples, beta));
    if (ess < kMinEffectiveSamples) {
      prof.undersampled = true;
      std::ostringstream msg;
      msg << "effective sample size " << ess << " at lambda=" << lambdas[i + 1] << " is below "
          << kMinEffectiveSamples;
      prof.warnings.push_back(msg.str());
    }
  }
  if (total_work) *total_work = paths.after(paths.steps - 1);
  return prof;
}

OscillatorRun oscillator_profile(const oscillator::OscillatorParams& params, const QuenchProtocol& protocol,
                                 double beta, const SamplerOptions& options, std::size_t grid_points,
                                 double tail_tol) {
  params.validate();
  protocol.validate();
  OscillatorRun run;
  run.quench_strength = oscillator::quench_strength(params, protocol.delta_lambda);
  for (int i = 1; i < protocol.stations; ++i) {
    const double lambda = protocol.lambda(i);
    const auto grid = oscillator::default_grid(params, lambda, run.quench_strength, grid_points, tail_tol);
    run.distributions.push_back(
        oscillator::position_distribution(params, lambda, run.quench_strength, grid, tail_tol));
  }
  const double k = params.stiffness;
  const Increment inc = [k](double x, double from, double to) { return oscillator_increment(x, from, to, k); };
  const auto target = [k](double lambda) { return k * lambda * lambda / 4.0; };
  run.profile = build_profile(run.distributions, protocol, inc, target, beta, options, &run.total_work);
  return run;
}

LatticeRun lattice_profile(const lattice::LatticeParams& params, const QuenchProtocol& protocol, double beta,
                           const SamplerOptions& options, const lattice::EvolutionOptions& evolution,
                           std::size_t bins) {
  protocol.validate();
  lattice::SpectrumCache cache(params);
  LatticeRun run;
  for (int i = 1; i < protocol.stations; ++i) {
    const double lambda = protocol.lambda(i);
    const auto before = cache.get(lambda - protocol.delta_lambda);
    const auto after = cache.get(lambda);
    const auto initial = lattice::ground_state(*before, params.particles);
    run.series.push_back(lattice::evolve_center_of_mass(initial, *after, evolution));
    run.distributions.push_back(lattice::time_average_distribution(run.series.back(), bins, evolution.allow_short));
  }
  const double v = params.trap;
  const int nb = params.particles;
  const double a = params.center;
  const Increment inc = [v, nb](double x, double from, double to) { return lattice_increment(x, from, to, v, nb); };
  const auto target = [v, nb, a](double lambda) { return v * nb * (lambda - a) * (lambda - a) / 2.0; };
  run.profile = build_profile(run.distributions, protocol, inc, target, beta, options, &run.total_work);
  return run;
}

} // namespace qtherm::jarzynski
