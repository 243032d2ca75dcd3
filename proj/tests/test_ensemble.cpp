#include "doctest.h"

#include "qtherm/ensemble.hpp"
#include "qtherm/error.hpp"
#include "qtherm/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace qtherm;

namespace {

DiagonalEnsemble make(std::vector<double> e, std::vector<double> p) {
  DiagonalEnsemble d;
  d.energies = std::move(e);
  d.probs = std::move(p);
  return d;
}

// Poisson weights summed in log space, independent of the library path.
double poisson_entropy_direct(double y, int levels) {
  double s = 0.0;
  for (int n = 0; n < levels; ++n) {
    const double lp = -y + n * std::log(y) - std::lgamma(n + 1.0);
    s -= std::exp(lp) * lp;
  }
  return s;
}

} // namespace

TEST_SUITE("ensemble") {

TEST_CASE("entropy of simple ensembles") {
  CHECK(entropy(make({0.0}, {1.0})) == 0.0);
  CHECK(entropy(make({0.0, 1.0}, {0.5, 0.5})) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(entropy(make({0.0, 1.0, 2.0}, {0.5, 0.0, 0.5})) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
}

TEST_CASE("entropy of the Poisson ensemble matches direct summation") {
  const auto ens = oscillator::poisson_ensemble({}, 0.0, 4.0);
  CHECK(std::abs(entropy(ens) - poisson_entropy_direct(2.0, 80)) < 1e-10);
  CHECK(std::abs(entropy(ens) - oscillator::entropy_closed_form(2.0)) < 1e-10);
}

TEST_CASE("mean energy") {
  CHECK(mean_energy(make({5.0}, {1.0})) == 5.0);
  CHECK(mean_energy(make({0.0, 1.0}, {0.5, 0.5})) == 0.5);
  for (const double dl : {0.6935, 2.0, 4.0}) {
    const oscillator::OscillatorParams p;
    const double lambda = 1.7;
    const double y = oscillator::quench_strength(p, dl);
    const auto ens = oscillator::poisson_ensemble(p, lambda, dl);
    CHECK(std::abs(mean_energy(ens) - ((y + 0.5) + p.stiffness * lambda * lambda / 4.0)) < 1e-10);
  }
}

TEST_CASE("non-normalized ensembles are rejected") {
  CHECK_THROWS_AS((void)entropy(make({0.0, 1.0}, {0.5, 0.4})), ValidationError);
  CHECK_THROWS_AS((void)mean_energy(make({0.0, 1.0}, {0.5})), ValidationError);
  CHECK_THROWS_AS((void)entropy(make({}, {})), ValidationError);
  CHECK_THROWS_AS((void)entropy(make({0.0, 1.0}, {1.5, -0.5})), ValidationError);
  CHECK_NOTHROW((void)entropy(make({0.0, 1.0}, {0.5, 0.5 + 5e-9})));
}

TEST_CASE("renormalize") {
  const auto a = renormalize(make({0.0, 1.0}, {0.25, 0.25}));
  CHECK(a.probs == std::vector<double>{0.5, 0.5});
  CHECK(a.discarded_mass == doctest::Approx(0.5));
  const auto b = renormalize(make({0.0}, {1.0}));
  CHECK(b.probs == std::vector<double>{1.0});
  CHECK(b.discarded_mass == 0.0);
  CHECK_THROWS_AS((void)renormalize(make({0.0, 1.0}, {0.0, 0.0})), ValidationError);
}

TEST_CASE("Poisson truncation below 1e-12 leaves the entropy unchanged") {
  for (const double y : {0.06, 2.0, 10.0}) {
    const double dl = oscillator::delta_lambda_for({}, y);
    const auto ens = oscillator::poisson_ensemble({}, 0.0, dl, 1e-12);
    const int n_max = static_cast<int>(ens.size());
    CHECK(std::abs(entropy(ens) - poisson_entropy_direct(y, n_max + 20)) < 1e-10);
  }
}

TEST_CASE("temperature of oscillator ensembles at y = 0.06 and 0.066") {
  const oscillator::OscillatorParams p;
  const auto a = oscillator::poisson_ensemble(p, 0.0, oscillator::delta_lambda_for(p, 0.06));
  const auto b = oscillator::poisson_ensemble(p, 0.0, oscillator::delta_lambda_for(p, 0.066));
  const auto t = temperature_from_pair(a, b);
  CHECK(std::abs(t.temperature - 0.35) / 0.35 < 0.03);
  CHECK(t.temperature * t.beta == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("purity-preserving pair gives zero temperature") {
  const auto a = make({0.0, 1.0}, {1.0, 0.0});
  const auto b = make({0.3, 1.3}, {1.0, 0.0});
  const auto t = temperature_from_pair(a, b);
  CHECK(t.temperature == 0.0);
  CHECK(std::isinf(t.beta));
  CHECK(t.dE == doctest::Approx(0.3));
}

TEST_CASE("entropy change without energy change is degenerate") {
  const auto a = make({1.0, 1.0}, {1.0, 0.0});
  const auto b = make({1.0, 1.0}, {0.5, 0.5});
  CHECK_THROWS_AS((void)temperature_from_pair(a, b), DegenerateEnergyError);
}

TEST_CASE("ensembles at different lambda are rejected") {
  auto a = make({0.0}, {1.0});
  auto b = a;
  a.lambda = 1.0;
  b.lambda = 2.0;
  CHECK_THROWS_AS((void)temperature_from_pair(a, b), ValidationError);
}

TEST_CASE("entropy properties on random ensembles") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 30);
    std::vector<double> e(n), p(n);
    for (int i = 0; i < n; ++i) {
      e[i] = 10.0 * u(rng) - 5.0;
      p[i] = u(rng) < 0.2 ? 0.0 : u(rng);
    }
    p[0] += 1e-3;
    const auto ens = renormalize(make(e, p));
    const double s = entropy(ens);
    CHECK(s >= 0.0);

    auto shuffled = ens;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < n; ++i) {
      shuffled.energies[i] = ens.energies[order[i]];
      shuffled.probs[i] = ens.probs[order[i]];
    }
    CHECK(entropy(shuffled) == doctest::Approx(s).epsilon(1e-12));

    auto shifted = ens;
    for (auto& x : shifted.energies) x += 3.7;
    CHECK(entropy(shifted) == s);

    auto scaled = ens;
    for (auto& x : scaled.energies) x *= -2.5;
    CHECK(mean_energy(scaled) == doctest::Approx(-2.5 * mean_energy(ens)).epsilon(1e-12));
  }
  CHECK(entropy(make({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0})) == 0.0);
  CHECK(entropy(make({0.0, 1.0}, {1.0 - 1e-9, 1e-9})) > 0.0);
}

TEST_CASE("finite-difference temperature converges at least linearly in epsilon") {
  const oscillator::OscillatorParams p;
  for (const double y : {0.06, 0.5, 2.0}) {
    const double exact = oscillator::temperature_closed_form(p, y);
    const double dl = oscillator::delta_lambda_for(p, y);
    const auto base = oscillator::poisson_ensemble(p, 0.0, dl);
    double prev = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double eps = 0.1 * dl / std::pow(2.0, k);
      const auto t = temperature_from_pair(base, oscillator::poisson_ensemble(p, 0.0, dl + eps));
      const double err = std::abs(t.temperature - exact);
      if (k > 0) CHECK(err <= 0.55 * prev);
      prev = err;
    }
  }
}

TEST_CASE("CSV round trip") {
  auto ens = oscillator::poisson_ensemble({}, 2.0, 1.5);
  ens.label = "lambda=2, dlambda=1.5";
  std::stringstream io;
  write_ensemble_csv(io, ens);
  const auto back = read_ensemble_csv(io);
  CHECK(back.label == ens.label);
  REQUIRE(back.lambda.has_value());
  CHECK(*back.lambda == 2.0);
  CHECK(*back.delta_lambda == 1.5);
  REQUIRE(back.size() == ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    CHECK(back.energies[i] == doctest::Approx(ens.energies[i]).epsilon(1e-11));
    CHECK(back.probs[i] == doctest::Approx(ens.probs[i]).epsilon(1e-11));
  }
  CHECK(std::abs(entropy(back) - entropy(ens)) < 1e-10);

  std::stringstream broken("# label: x\nenergy,probability\n0,0.5\n1,0.2\n");
  CHECK_THROWS_AS((void)read_ensemble_csv(broken), ValidationError);
}

} // TEST_SUITE
