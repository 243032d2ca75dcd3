#include "qtherm/lattice.hpp"

#include "qtherm/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

namespace qtherm::lattice {

namespace {

using cplx = std::complex<double>;

constexpr double kDegenerateLevels = 1e-12;
constexpr double kMinCapturedMass = 0.99;
constexpr double kOrthonormalityDrift = 1e-6;
constexpr double kEdgeOccupancy = 1e-6;
// Below this |det A|^2 the minor expansion around the Fermi sea is
// ill-conditioned and full determinants are used instead.
constexpr double kMinorExpansionFloor = 1e-10;

double site_coordinate(Eigen::Index row) { return static_cast<double>(row + 1); }

// All r-subsets of [first, first + count), lexicographic.
std::vector<std::vector<int>> subsets(int first, int count, int r) {
  std::vector<std::vector<int>> out;
  if (r > count) return out;
  std::vector<int> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<int> s(idx);
    for (int& v : s) v += first;
    out.push_back(std::move(s));
    int i = r - 1;
    while (i >= 0 && idx[i] == count - r + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

template <int R>
double minor_probability(const Eigen::MatrixXcd& ratio, const std::vector<int>& parts,
                         const std::vector<int>& holes) {
  Eigen::Matrix<cplx, R, R> m;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j) m(i, j) = ratio(parts[i], holes[j]);
  return std::norm(m.determinant());
}

double dynamic_minor_probability(const Eigen::MatrixXcd& ratio, const std::vector<int>& parts,
                                 const std::vector<int>& holes) {
  const auto r = static_cast<Eigen::Index>(parts.size());
  Eigen::MatrixXcd m(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) m(i, j) = ratio(parts[i], holes[j]);
  return std::norm(m.partialPivLu().determinant());
}

struct Candidate {
  double energy;
  double prob;
  std::uint64_t mask;
};

} // namespace

std::vector<int> occupied_levels(std::uint64_t mask, int sites) {
  std::vector<int> out;
  for (int l = 0; l < sites; ++l)
    if (mask >> l & 1U) out.push_back(l);
  return out;
}

void LatticeParams::validate() const {
  if (sites < 1) throw ValidationError("lattice needs at least one site");
  if (particles < 1 || particles > sites) throw ValidationError("lattice: need 1 <= N_b <= N");
  if (!(hopping > 0.0)) throw ValidationError("lattice: hopping J must be positive");
  if (!(trap >= 0.0)) throw ValidationError("lattice: trap stiffness V must be non-negative");
  if (!std::isfinite(center)) throw ValidationError("lattice: trap centre must be finite");
}

Eigen::MatrixXd one_body_hamiltonian(const LatticeParams& p, double lambda) {
  p.validate();
  const int n = p.sites;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double site = site_coordinate(k);
    h(k, k) = p.trap * ((site - p.center) * (site - p.center) + (site - lambda) * (site - lambda));
    if (k + 1 < n) h(k, k + 1) = h(k + 1, k) = -p.hopping;
  }
  return h;
}

Eigen::MatrixXd SingleParticleSpectrum::hamiltonian() const {
  const auto n = diagonal.size();
  Eigen::MatrixXd h = diagonal.asDiagonal();
  for (Eigen::Index k = 0; k + 1 < n; ++k) h(k, k + 1) = h(k + 1, k) = off_diagonal(k);
  return h;
}

SingleParticleSpectrum diagonalize(const LatticeParams& p, double lambda) {
  const Eigen::MatrixXd h = one_body_hamiltonian(p, lambda);
  SingleParticleSpectrum s;
  s.lambda = lambda;
  s.diagonal = h.diagonal();
  s.off_diagonal = p.sites > 1 ? Eigen::VectorXd(h.diagonal(1)) : Eigen::VectorXd();
  if (p.sites == 1) {
    s.energies = s.diagonal;
    s.vectors = Eigen::MatrixXd::Identity(1, 1);
    return s;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(s.diagonal, s.off_diagonal, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolver failed");
  s.energies = solver.eigenvalues();
  s.vectors = solver.eigenvectors();
  return s;
}

SpectrumCache::SpectrumCache(LatticeParams params) : params_(params) { params_.validate(); }

std::shared_ptr<const SingleParticleSpectrum> SpectrumCache::get(double lambda) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = spectra_.find(lambda); it != spectra_.end()) return it->second;
  }
  auto spectrum = std::make_shared<const SingleParticleSpectrum>(diagonalize(params_, lambda));
  std::lock_guard lock(mutex_);
  return spectra_.try_emplace(lambda, std::move(spectrum)).first->second;
}

std::size_t SpectrumCache::size() const {
  std::lock_guard lock(mutex_);
  return spectra_.size();
}

double SlaterState::orthonormality_error() const {
  const Eigen::MatrixXcd gram = orbitals.adjoint() * orbitals;
  return (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

SlaterState eigenstate(const SingleParticleSpectrum& spectrum, const std::vector<int>& levels) {
  SlaterState s;
  s.orbitals.resize(spectrum.sites(), static_cast<Eigen::Index>(levels.size()));
  for (std::size_t b = 0; b < levels.size(); ++b) {
    const int l = levels[b];
    if (l < 0 || l >= spectrum.sites()) throw ValidationError("eigenstate: level index out of range");
    s.orbitals.col(static_cast<Eigen::Index>(b)) = spectrum.vectors.col(l).cast<cplx>();
  }
  s.occupied = levels;
  return s;
}

SlaterState ground_state(const SingleParticleSpectrum& spectrum, int particles) {
  if (particles < 1 || particles > spectrum.sites()) throw ValidationError("ground_state: need 1 <= N_b <= N");
  if (particles < spectrum.sites()) {
    const double gap = spectrum.energies(particles) - spectrum.energies(particles - 1);
    if (gap <= kDegenerateLevels) {
      std::ostringstream msg;
      msg << "ground_state: degenerate Fermi level, levels " << particles << " and " << particles + 1
          << " differ by " << gap;
      throw ValidationError(msg.str());
    }
  }
  std::vector<int> levels(static_cast<std::size_t>(particles));
  std::iota(levels.begin(), levels.end(), 0);
  return eigenstate(spectrum, levels);
}

SlaterState ground_state(const LatticeParams& p, double lambda) {
  return ground_state(diagonalize(p, lambda), p.particles);
}

double overlap_probability(const SlaterState& initial, const SlaterState& eigen) {
  if (initial.sites() != eigen.sites() || initial.particles() != eigen.particles())
    throw ValidationError("overlap_probability: states live on different lattices or particle numbers");
  const Eigen::MatrixXcd m = eigen.orbitals.adjoint() * initial.orbitals;
  return std::norm(m.partialPivLu().determinant());
}

Eigen::VectorXd densities(const SlaterState& state) { return state.orbitals.rowwise().squaredNorm(); }

double center_of_mass(const SlaterState& state) {
  const Eigen::VectorXd n = densities(state);
  double x = 0.0;
  for (Eigen::Index k = 0; k < n.size(); ++k) x += site_coordinate(k) * n(k);
  return x / static_cast<double>(state.particles());
}

double energy_expectation(const SlaterState& initial, const Eigen::MatrixXd& h) {
  if (h.rows() != initial.sites() || h.cols() != initial.sites())
    throw ValidationError("energy_expectation: Hamiltonian and state dimensions differ");
  return (initial.orbitals.adjoint() * h.cast<cplx>() * initial.orbitals).trace().real();
}

LatticeEnsemble diagonal_ensemble(SpectrumCache& cache, double lambda, double delta_lambda,
                                  const EnsembleOptions& options) {
  const LatticeParams& p = cache.params();
  if (!(options.prob_cutoff > 0.0 && options.prob_cutoff <= 1e-6))
    throw ValidationError("diagonal_ensemble: prob_cutoff must lie in (0, 1e-6]");
  if (options.max_states < 1) throw ValidationError("diagonal_ensemble: max_states must be positive");
  if (p.sites > 64) throw ValidationError("diagonal_ensemble: at most 64 sites supported");

  const auto initial_spec = cache.get(lambda - delta_lambda);
  const auto final_spec = cache.get(lambda);
  const SlaterState initial = ground_state(*initial_spec, p.particles);
  const int nb = p.particles;
  const int n = p.sites;
  const Eigen::VectorXd& eps = final_spec->energies;

  // Overlaps of every final level with the initial orbitals.
  const Eigen::MatrixXcd overlaps = final_spec->vectors.transpose().cast<cplx>() * initial.orbitals;
  const Eigen::MatrixXcd sea = overlaps.topRows(nb);
  const auto sea_lu = sea.partialPivLu();
  const double sea_prob = std::norm(sea_lu.determinant());
  const bool use_minors = !options.full_determinants && sea_prob >= kMinorExpansionFloor;
  // ratio(j, b): replacing sea row b by level j multiplies det by ratio(j, b).
  Eigen::MatrixXcd ratio;
  if (use_minors) ratio = overlaps * sea_lu.inverse();

  const double sea_energy = eps.head(nb).sum();
  const double target = 1.0 - options.prob_cutoff;

  LatticeEnsemble out;
  auto& ens = out.ensemble;
  double captured = 0.0;
  auto keep = [&](double energy, double prob, std::uint64_t mask, int rank) {
    ens.energies.push_back(energy);
    ens.probs.push_back(prob);
    out.occupations.push_back(mask);
    out.ranks.push_back(rank);
    captured += prob;
    out.highest_rank = std::max(out.highest_rank, rank);
  };

  std::uint64_t sea_mask = 0;
  for (int l = 0; l < nb; ++l) sea_mask |= std::uint64_t{1} << l;
  keep(sea_energy, sea_prob, sea_mask, 0);

  const int max_rank = std::min(nb, n - nb);
  for (int rank = 1; rank <= max_rank && captured < target && ens.size() < options.max_states; ++rank) {
    const double members = binomial(nb, rank) * binomial(n - nb, rank);
    if (members > static_cast<double>(options.max_rank_size)) {
      std::ostringstream msg;
      msg << "diagonal_ensemble: rank " << rank << " has " << members << " states (limit "
          << options.max_rank_size << "); captured mass " << captured;
      throw ConvergenceError(msg.str());
    }
    const auto hole_sets = subsets(0, nb, rank);
    const auto part_sets = subsets(nb, n - nb, rank);
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>(members));
    Eigen::MatrixXcd rows(nb, nb);
    for (const auto& holes : hole_sets) {
      double removed = 0.0;
      for (const int h : holes) removed += eps(h);
      for (const auto& parts : part_sets) {
        double added = 0.0;
        std::uint64_t mask = sea_mask;
        for (const int h : holes) mask &= ~(std::uint64_t{1} << h);
        for (const int q : parts) {
          added += eps(q);
          mask |= std::uint64_t{1} << q;
        }
        double prob = 0.0;
        if (use_minors) {
          switch (rank) {
          case 1: prob = std::norm(ratio(parts[0], holes[0])); break;
          case 2: prob = minor_probability<2>(ratio, parts, holes); break;
          case 3: prob = minor_probability<3>(ratio, parts, holes); break;
          case 4: prob = minor_probability<4>(ratio, parts, holes); break;
          default: prob = dynamic_minor_probability(ratio, parts, holes); break;
          }
          prob *= sea_prob;
        } else {
          Eigen::Index row = 0;
          for (int l = 0; l < n; ++l)
            if (mask >> l & 1U) rows.row(row++) = overlaps.row(l);
          prob = std::norm(rows.partialPivLu().determinant());
        }
        candidates.push_back({sea_energy - removed + added, prob, mask});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.energy < b.energy; });
    for (const auto& c : candidates) {
      if (captured >= target || ens.size() >= options.max_states) break;
      keep(c.energy, c.prob, c.mask, rank);
    }
  }

  out.captured_mass = captured;
  if (captured < kMinCapturedMass) {
    std::ostringstream msg;
    msg << "diagonal_ensemble: captured mass " << captured << " after " << ens.size()
        << " states (max_states " << options.max_states << ", highest rank " << out.highest_rank << ")";
    throw ConvergenceError(msg.str());
  }

  ens.lambda = lambda;
  ens.delta_lambda = delta_lambda;
  std::ostringstream label;
  label << "lattice lambda=" << lambda << " dlambda=" << delta_lambda;
  ens.label = label.str();
  ens = renormalize(std::move(ens));
  return out;
}

LatticeEnsemble diagonal_ensemble(const LatticeParams& p, double lambda, double delta_lambda,
                                  const EnsembleOptions& options) {
  SpectrumCache cache(p);
  return diagonal_ensemble(cache, lambda, delta_lambda, options);
}

LatticeTemperature lattice_temperature(SpectrumCache& cache, double lambda, double delta_lambda, double epsilon,
                                       const EnsembleOptions& options) {
  if (!(delta_lambda > 0.0)) throw ValidationError("lattice_temperature: delta_lambda must be positive");
  if (!(epsilon > 0.0)) epsilon = 0.1 * delta_lambda;
  const auto a = diagonal_ensemble(cache, lambda, delta_lambda, options);
  const auto b = diagonal_ensemble(cache, lambda, delta_lambda + epsilon, options);
  LatticeTemperature t;
  t.estimate = temperature_from_pair(a.ensemble, b.ensemble);
  t.entropy = entropy(a.ensemble);
  t.energy = mean_energy(a.ensemble);
  t.captured_mass = a.captured_mass;
  t.captured_mass_shifted = b.captured_mass;
  return t;
}

LatticeTemperature lattice_temperature(const LatticeParams& p, double lambda, double delta_lambda, double epsilon,
                                       const EnsembleOptions& options) {
  SpectrumCache cache(p);
  return lattice_temperature(cache, lambda, delta_lambda, epsilon, options);
}

SlaterState evolve(const SlaterState& initial, const SingleParticleSpectrum& spectrum, double t) {
  if (initial.sites() != spectrum.sites()) throw ValidationError("evolve: state and spectrum sizes differ");
  const Eigen::MatrixXcd u = spectrum.vectors.cast<cplx>();
  Eigen::MatrixXcd coeff = u.adjoint() * initial.orbitals;
  for (Eigen::Index a = 0; a < coeff.rows(); ++a) coeff.row(a) *= std::polar(1.0, -spectrum.energies(a) * t);
  SlaterState out;
  out.orbitals = u * coeff;
  return out;
}

TimeSeries evolve_center_of_mass(const SlaterState& initial, const SingleParticleSpectrum& spectrum,
                                 const EvolutionOptions& options) {
  const int n = spectrum.sites();
  if (initial.sites() != n) throw ValidationError("evolve_center_of_mass: state and spectrum sizes differ");
  if (!(options.dt > 0.0)) throw ValidationError("evolve_center_of_mass: dt must be positive");
  const double n2 = static_cast<double>(n) * n;
  const double horizon = options.horizon > 0.0 ? options.horizon : 2.0 * n2;
  if (horizon < n2 && !options.allow_short)
    throw ValidationError("evolve_center_of_mass: horizon shorter than N^2");

  TimeSeries series;
  series.sites = n;
  series.particles = initial.particles();
  const auto nb = static_cast<double>(initial.particles());
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / options.dt - 1e-9));
  series.times.reserve(steps);
  series.center_of_mass.reserve(steps);

  const Eigen::MatrixXcd u = spectrum.vectors.cast<cplx>();
  Eigen::MatrixXcd coeff0 = u.adjoint() * initial.orbitals;
  Eigen::MatrixXcd coeff(coeff0.rows(), coeff0.cols());
  Eigen::MatrixXcd orbitals(n, initial.particles());
  const Eigen::VectorXd& diag = spectrum.diagonal;
  const Eigen::VectorXd& off = spectrum.off_diagonal;

  auto energy_of = [&](const Eigen::MatrixXcd& p) {
    double e = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      e += diag(k) * p.row(k).squaredNorm();
      if (k + 1 < n) e += 2.0 * off(k) * p.row(k).dot(p.row(k + 1)).real();
    }
    return e;
  };

  double e0 = 0.0;
  bool warned_edge = false;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * options.dt;
    for (Eigen::Index a = 0; a < coeff0.rows(); ++a)
      coeff.row(a) = coeff0.row(a) * std::polar(1.0, -spectrum.energies(a) * t);
    orbitals.noalias() = u * coeff;

    const Eigen::VectorXd occ = orbitals.rowwise().squaredNorm();
    double x = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) x += site_coordinate(k) * occ(k);
    series.times.push_back(t);
    series.center_of_mass.push_back(x / nb);

    series.max_particle_error = std::max(series.max_particle_error, std::abs(occ.sum() - nb));
    const double edge = std::max(occ(0), occ(n - 1));
    series.max_edge_occupancy = std::max(series.max_edge_occupancy, edge);
    if (edge > kEdgeOccupancy && !warned_edge) {
      warned_edge = true;
      std::ostringstream msg;
      msg << "edge occupancy " << edge << " at t=" << t << " exceeds " << kEdgeOccupancy;
      series.warnings.push_back(msg.str());
    }
    const double e = energy_of(orbitals);
    if (s == 0) e0 = e;
    series.max_energy_drift = std::max(series.max_energy_drift, std::abs(e - e0));

    if (s % 64 == 0) {
      const Eigen::MatrixXcd gram = orbitals.adjoint() * orbitals;
      const double drift =
          (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      series.max_orthonormality_error = std::max(series.max_orthonormality_error, drift);
      if (drift > kOrthonormalityDrift) {
        std::ostringstream msg;
        msg << "orbital orthonormality drift " << drift << " at t=" << t << "; re-orthonormalized";
        series.warnings.push_back(msg.str());
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(coeff0);
        coeff0 = qr.householderQ() * Eigen::MatrixXcd::Identity(coeff0.rows(), coeff0.cols());
      }
    }
  }
  return series;
}

PositionDistribution time_average_distribution(const TimeSeries& series, std::size_t bins, bool allow_short) {
  const auto& xs = series.center_of_mass;
  if (xs.size() < kMinTimeSamples)
    throw ValidationError("time_average_distribution: need at least " + std::to_string(kMinTimeSamples) +
                          " samples, got " + std::to_string(xs.size()));
  const double n2 = static_cast<double>(series.sites) * series.sites;
  // Samples cover [t_0, t_last + dt).
  const double dt = series.times.size() > 1 ? series.times[1] - series.times[0] : 0.0;
  if (!allow_short && series.duration() + dt < n2 - 1e-9)
    throw ValidationError("time_average_distribution: series shorter than N^2 time units");
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double range = *hi_it - *lo_it;
  const double pad = range > 0.0 ? 0.05 * range : 1e-6 * std::max(1.0, std::abs(*lo_it));
  return histogram(xs, bins, *lo_it - pad, *hi_it + pad);
}

} // namespace qtherm::lattice
