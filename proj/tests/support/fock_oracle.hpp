#pragma once

// Dense hard-core-boson reference for small lattices: the full
// C(N, N_b)-dimensional occupation basis, bosonic hopping with no
// Jordan-Wigner strings, and a plain dense eigensolver.

#include "qtherm/lattice.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace qtherm::testing {

struct FockBasis {
  int sites = 0;
  int particles = 0;
  std::vector<std::uint64_t> configs; ///< bit k-1 set = site k occupied
};

FockBasis fock_basis(int sites, int particles);

Eigen::MatrixXd fock_hamiltonian(const lattice::LatticeParams& p, double lambda, const FockBasis& basis);

/// Diagonal of sum_k k n_k / N_b in the occupation basis.
Eigen::VectorXd fock_center_of_mass(const FockBasis& basis);

struct FockSolution {
  FockBasis basis;
  Eigen::VectorXd energies; ///< ascending
  Eigen::MatrixXd vectors;
};

FockSolution fock_solve(const lattice::LatticeParams& p, double lambda);

/// Quench lambda - dl -> lambda from the many-body ground state.
struct FockQuench {
  FockSolution post;
  Eigen::VectorXd initial;
  Eigen::VectorXd probs; ///< |<E_n|psi_0>|^2 in the order of post.energies
};

FockQuench fock_quench(const lattice::LatticeParams& p, double lambda, double delta_lambda);

/// <x>(t) of the quenched state.
double fock_center_of_mass_at(const FockQuench& q, double t);

} // namespace qtherm::testing
