#include "doctest.h"

#include "support/fock_oracle.hpp"

#include "qtherm/error.hpp"
#include "qtherm/lattice.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace qtherm;
using namespace qtherm::lattice;

namespace {

// Small lattice with no accidental degeneracies.
LatticeParams small_lattice() { return LatticeParams{6, 2, 1.0, 0.3, 2.3}; }

std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

} // namespace

TEST_SUITE("lattice") {

TEST_CASE("one-body Hamiltonian") {
  SUBCASE("open chain without trap") {
    const LatticeParams p{12, 3, 1.0, 0.0, 1.0};
    const auto spec = diagonalize(p, 5.0);
    for (int a = 1; a <= 12; ++a)
      CHECK(spec.energies(a - 1) == doctest::Approx(-2.0 * std::cos(std::numbers::pi * a / 13.0)).epsilon(1e-12).scale(1.0));
    const auto two = diagonalize(LatticeParams{2, 1, 1.0, 0.0, 1.0}, 0.0);
    CHECK(two.energies(0) == doctest::Approx(-1.0));
    CHECK(two.energies(1) == doctest::Approx(1.0));
  }
  SUBCASE("both traps centred") {
    const LatticeParams p;
    const auto h = one_body_hamiltonian(p, 13.0);
    CHECK(h(12, 12) == 0.0);
    CHECK(h(0, 1) == -1.0);
    CHECK(h(0, 2) == 0.0);
    CHECK(h(39, 39) == doctest::Approx(2.0 * 0.0225 * 27.0 * 27.0));
  }
  SUBCASE("spectrum is sorted and orthonormal, and matches a dense solve") {
    const LatticeParams p;
    const auto spec = diagonalize(p, 16.5);
    for (int a = 1; a < spec.sites(); ++a) CHECK(spec.energies(a) >= spec.energies(a - 1));
    const Eigen::MatrixXd gram = spec.vectors.transpose() * spec.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(one_body_hamiltonian(p, 16.5));
    CHECK((dense.eigenvalues() - spec.energies).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((spec.hamiltonian() - one_body_hamiltonian(p, 16.5)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS((void)diagonalize(LatticeParams{8, 9, 1.0, 0.1, 3.0}, 3.0), ValidationError);
    CHECK_THROWS_AS((void)diagonalize(LatticeParams{8, 2, 0.0, 0.1, 3.0}, 3.0), ValidationError);
    CHECK_THROWS_AS((void)diagonalize(LatticeParams{8, 2, 1.0, -0.1, 3.0}, 3.0), ValidationError);
  }
}

TEST_CASE("spectrum cache returns the same decomposition") {
  SpectrumCache cache(LatticeParams{});
  const auto a = cache.get(14.0);
  const auto b = cache.get(14.0);
  CHECK(a.get() == b.get());
  (void)cache.get(15.0);
  CHECK(cache.size() == 2);
}

TEST_CASE("ground state") {
  SUBCASE("single particle sits between the traps") {
    const LatticeParams p{40, 1, 1.0, 0.0225, 13.0};
    const auto g = ground_state(p, 17.0);
    CHECK(center_of_mass(g) == doctest::Approx(15.0).epsilon(1e-6));
    const auto n = densities(g);
    Eigen::Index peak = 0;
    n.maxCoeff(&peak);
    CHECK(peak + 1 == 15);
  }
  SUBCASE("energy is the sum of the filled levels") {
    const LatticeParams p;
    const auto spec = diagonalize(p, 13.0);
    const auto g = ground_state(spec, p.particles);
    CHECK(energy_expectation(g, spec.hamiltonian()) == doctest::Approx(spec.energies.head(10).sum()).epsilon(1e-12));
    CHECK(g.orthonormality_error() < 1e-12);
  }
  SUBCASE("strong trap pins the particles") {
    const LatticeParams p{9, 3, 1.0, 1e6, 5.0};
    const auto n = densities(ground_state(p, 5.0));
    CHECK(n(3) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n(4) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n(5) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n.sum() == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("degenerate Fermi level") {
    const LatticeParams p{4, 1, 1e-20, 1.0, 2.5};
    CHECK_THROWS_WITH_AS((void)ground_state(p, 2.5), doctest::Contains("levels 1 and 2"), ValidationError);
  }
}

TEST_CASE("overlap probability") {
  const LatticeParams p;
  const auto spec = diagonalize(p, 15.0);
  const auto g = ground_state(spec, 10);
  CHECK(overlap_probability(g, g) == doctest::Approx(1.0).epsilon(1e-12));
  const auto a = eigenstate(spec, {0, 1});
  const auto b = eigenstate(spec, {2, 3});
  CHECK(overlap_probability(a, b) < 1e-28);
  CHECK_THROWS_AS((void)overlap_probability(g, a), ValidationError);
}

TEST_CASE("overlaps over a complete eigenbasis sum to one") {
  for (const auto& [sites, nb] : std::vector<std::pair<int, int>>{{8, 3}, {8, 4}, {7, 2}}) {
    const LatticeParams p{sites, nb, 1.0, 0.2, 3.0};
    const auto post = diagonalize(p, 4.5);
    const auto initial = ground_state(p, 3.2);
    double total = 0.0;
    for (const auto& levels : all_subsets(sites, nb)) total += overlap_probability(initial, eigenstate(post, levels));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dense Fock-space oracle at N = 6, N_b = 2") {
  const auto p = small_lattice();
  const double lambda = 3.7, dl = 1.0;
  const auto oracle = testing::fock_quench(p, lambda, dl);
  REQUIRE(oracle.post.energies.size() == 15);

  EnsembleOptions opts;
  opts.prob_cutoff = 1e-300;
  const auto ens = diagonal_ensemble(p, lambda, dl, opts);
  REQUIRE(ens.ensemble.size() == 15);

  std::vector<std::size_t> order(15);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return ens.ensemble.energies[i] < ens.ensemble.energies[j]; });
  for (std::size_t n = 0; n < 15; ++n) {
    CHECK(std::abs(ens.ensemble.energies[order[n]] - oracle.post.energies(n)) < 1e-10);
    CHECK(std::abs(ens.ensemble.probs[order[n]] - oracle.probs(n)) < 1e-12);
  }
  CHECK(ens.captured_mass == doctest::Approx(1.0).epsilon(1e-12));

  DiagonalEnsemble reference;
  for (Eigen::Index n = 0; n < 15; ++n) {
    reference.energies.push_back(oracle.post.energies(n));
    reference.probs.push_back(oracle.probs(n));
  }
  CHECK(std::abs(entropy(ens.ensemble) - entropy(reference)) < 1e-10);

  const auto spec = diagonalize(p, lambda);
  const auto initial = ground_state(p, lambda - dl);
  const Eigen::VectorXd x_op = testing::fock_center_of_mass(oracle.post.basis);
  CHECK(std::abs(center_of_mass(initial) - oracle.initial.dot(x_op.cwiseProduct(oracle.initial))) < 1e-10);
  CHECK(std::abs(energy_expectation(initial, spec.hamiltonian()) - mean_energy(reference)) < 1e-10);

  SUBCASE("centre of mass along the evolution") {
    const auto series = evolve_center_of_mass(initial, spec, EvolutionOptions{50.0, 0.5, false});
    for (std::size_t j = 0; j < series.times.size(); j += 7)
      CHECK(std::abs(series.center_of_mass[j] - testing::fock_center_of_mass_at(oracle, series.times[j])) < 1e-10);
  }
  SUBCASE("long-time average equals the diagonal-ensemble expectation") {
    const Eigen::VectorXd x_diag = (oracle.post.vectors.transpose() * x_op.asDiagonal() * oracle.post.vectors).diagonal();
    const double dephased = oracle.probs.dot(x_diag);
    const auto series = evolve_center_of_mass(initial, spec, EvolutionOptions{2000.0, 0.1, false});
    const double average = std::accumulate(series.center_of_mass.begin(), series.center_of_mass.end(), 0.0) /
                           static_cast<double>(series.center_of_mass.size());
    CHECK(std::abs(average - dephased) < 1e-3);
  }
}

TEST_CASE("diagonal ensemble") {
  const LatticeParams p;
  SUBCASE("no quench") {
    const auto ens = diagonal_ensemble(p, 15.0, 0.0);
    REQUIRE(ens.ensemble.size() == 1);
    CHECK(ens.ensemble.probs[0] == 1.0);
    CHECK(ens.captured_mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("defaults at lambda = 15, dl = 1") {
    const auto ens = diagonal_ensemble(p, 15.0, 1.0);
    CHECK(ens.captured_mass >= 1.0 - 1e-6);
    CHECK(ens.ensemble.size() < 2000);
    CHECK(std::abs(ens.ensemble.total_probability() - 1.0) < 1e-12);
    CHECK(ens.ensemble.lambda == 15.0);
    CHECK(ens.ensemble.delta_lambda == 1.0);
    for (std::size_t i = 1; i < ens.ranks.size(); ++i) CHECK(ens.ranks[i] >= ens.ranks[i - 1]);

    const auto spec = diagonalize(p, 15.0);
    for (std::size_t i = 0; i < ens.ensemble.size(); i += 37) {
      double e = 0.0;
      for (const int a : occupied_levels(ens.occupations[i], 40)) e += spec.energies(a);
      CHECK(e == doctest::Approx(ens.ensemble.energies[i]).epsilon(1e-12));
    }
  }
  SUBCASE("minor determinants agree with full determinants") {
    EnsembleOptions full;
    full.full_determinants = true;
    const auto a = diagonal_ensemble(p, 16.0, 1.5);
    const auto b = diagonal_ensemble(p, 16.0, 1.5, full);
    REQUIRE(a.ensemble.size() == b.ensemble.size());
    for (std::size_t i = 0; i < a.ensemble.size(); ++i) {
      CHECK(a.occupations[i] == b.occupations[i]);
      CHECK(std::abs(a.ensemble.probs[i] - b.ensemble.probs[i]) < 1e-12);
    }
  }
  SUBCASE("mean energy equals the quenched-state energy") {
    for (const double dl : {0.5, 1.0, 2.0}) {
      const auto ens = diagonal_ensemble(p, 15.0, dl);
      const double direct = energy_expectation(ground_state(p, 15.0 - dl), one_body_hamiltonian(p, 15.0));
      CHECK(std::abs(mean_energy(ens.ensemble) - direct) < 1e-4);
    }
  }
  SUBCASE("options are checked") {
    EnsembleOptions bad;
    bad.prob_cutoff = 1e-3;
    CHECK_THROWS_AS((void)diagonal_ensemble(p, 15.0, 1.0, bad), ValidationError);
  }
  SUBCASE("state budget exhausted before 0.99 of the mass") {
    EnsembleOptions tiny;
    tiny.max_states = 3;
    CHECK_THROWS_AS((void)diagonal_ensemble(p, 15.0, 3.0, tiny), ConvergenceError);
  }
}

TEST_CASE("energy anchor at lambda = 15, dl = 1") {
  const LatticeParams p;
  const double e = energy_expectation(ground_state(p, 14.0), one_body_hamiltonian(p, 15.0));
  CHECK(std::abs(e - (-0.383)) / 0.383 < 0.05);
  const double e0 = energy_expectation(ground_state(p, 15.0), one_body_hamiltonian(p, 15.0));
  CHECK(e0 == doctest::Approx(diagonalize(p, 15.0).energies.head(10).sum()).epsilon(1e-12));
}

TEST_CASE("lattice temperature") {
  const LatticeParams p;
  const auto t = lattice_temperature(p, 15.0, 1.0);
  CHECK(std::abs(t.estimate.temperature - 0.1953) / 0.1953 < 0.10);
  CHECK(t.captured_mass >= 1.0 - 1e-6);
  CHECK(t.captured_mass_shifted >= 1.0 - 1e-6);
  const double t_small = lattice_temperature(p, 15.0, 0.05).estimate.temperature;
  const double t_mid = lattice_temperature(p, 15.0, 0.2).estimate.temperature;
  CHECK(t_small < t_mid);
  CHECK(t_mid < t.estimate.temperature);
  CHECK(t_small < 0.05);
}

TEST_CASE("time evolution") {
  const LatticeParams p;
  SpectrumCache cache(p);
  SUBCASE("stationary state") {
    const auto spec = cache.get(14.0);
    const auto s = evolve_center_of_mass(ground_state(*spec, 10), *spec, EvolutionOptions{1600.0, 0.5, false});
    const auto [lo, hi] = std::minmax_element(s.center_of_mass.begin(), s.center_of_mass.end());
    CHECK(*hi - *lo < 1e-10);
  }
  SUBCASE("quench to lambda = 14 at the default horizon") {
    const auto s = evolve_center_of_mass(ground_state(*cache.get(13.0), 10), *cache.get(14.0));
    CHECK(s.times.size() == 32000);
    CHECK(s.duration() + 0.1 == doctest::Approx(3200.0));
    CHECK(s.center_of_mass.front() == doctest::Approx(13.0).epsilon(1e-3));
    CHECK(s.max_particle_error < 1e-10);
    CHECK(s.max_energy_drift < 1e-8);
    CHECK(s.max_orthonormality_error < 1e-8);
    const auto [lo, hi] = std::minmax_element(s.center_of_mass.begin(), s.center_of_mass.end());
    CHECK(*lo >= 1.0);
    CHECK(*hi <= 40.0);
    CHECK(*hi - *lo > 0.5);

    const auto hist = time_average_distribution(s, 50);
    CHECK(std::abs(hist.mass() - 1.0) < 1e-12);
    CHECK(count_modes(hist, 0.1) == 2);

    // Doubling the horizon: re-bin on the same edges.
    const auto longer = evolve_center_of_mass(ground_state(*cache.get(13.0), 10), *cache.get(14.0),
                                              EvolutionOptions{6400.0, 0.1, false});
    const double lo_edge = hist.x.front() - hist.bin_width / 2.0;
    const double hi_edge = hist.x.back() + hist.bin_width / 2.0;
    const auto rebinned = histogram(longer.center_of_mass, hist.size(), lo_edge, hi_edge);
    for (std::size_t j = 0; j < hist.size(); ++j)
      CHECK(std::abs(rebinned.density[j] - hist.density[j]) * hist.bin_width < 0.02);
  }
  SUBCASE("propagated state matches the sampled series") {
    const auto initial = ground_state(*cache.get(15.0), 10);
    const auto s = evolve_center_of_mass(initial, *cache.get(16.0), EvolutionOptions{1600.0, 0.1, false});
    for (const std::size_t j : {std::size_t{0}, std::size_t{123}, std::size_t{15999}}) {
      const auto state = evolve(initial, *cache.get(16.0), s.times[j]);
      CHECK(center_of_mass(state) == doctest::Approx(s.center_of_mass[j]).epsilon(1e-9));
      CHECK(densities(state).sum() == doctest::Approx(10.0).epsilon(1e-12));
    }
  }
  SUBCASE("short horizons need an explicit override") {
    const auto initial = ground_state(*cache.get(13.0), 10);
    CHECK_THROWS_AS((void)evolve_center_of_mass(initial, *cache.get(14.0), EvolutionOptions{100.0, 0.1, false}),
                    ValidationError);
    const auto s = evolve_center_of_mass(initial, *cache.get(14.0), EvolutionOptions{200.0, 0.1, true});
    CHECK_THROWS_AS((void)time_average_distribution(s, 50), ValidationError);
    CHECK_NOTHROW((void)time_average_distribution(s, 50, true));
  }
}

TEST_CASE("time-average histogram edge cases") {
  TimeSeries constant;
  constant.sites = 6;
  constant.particles = 2;
  for (int j = 0; j < 1000; ++j) {
    constant.times.push_back(0.1 * j);
    constant.center_of_mass.push_back(3.25);
  }
  const auto hist = time_average_distribution(constant, 20);
  CHECK(std::count_if(hist.density.begin(), hist.density.end(), [](double f) { return f > 0.0; }) == 1);
  CHECK(hist.mass() == doctest::Approx(1.0));

  constant.times.pop_back();
  constant.center_of_mass.pop_back();
  CHECK_THROWS_AS((void)time_average_distribution(constant, 20), ValidationError);
}

} // TEST_SUITE
