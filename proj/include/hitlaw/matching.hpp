#pragma once

// Coincidence times of N independent equilibrium orbits, treated as hitting
// times of the diagonal in the product shift.

#include <cstddef>
#include <memory>
#include <vector>

#include "hitlaw/pointprocess.hpp"
#include "hitlaw/subsystem.hpp"
#include "hitlaw/thermo.hpp"

namespace hitlaw {

struct Factor {
  BlockPotential potential;
  ThermoSolution solution;
};

struct ProductSystem {
  std::vector<Factor> factors;
  std::size_t alphabet = 0;  // l, shared by all factors
  SystemPtr product;         // on l^N mixed-radix states, factor 0 most significant
  BlockPotential potential;  // sum of factor potentials
  ThermoSolution solution;
  double pressure_residual = 0.0;    // |P - sum P_i|
  double stationary_residual = 0.0;  // max |p - tensor of factor p_i|

  std::size_t N() const noexcept { return factors.size(); }
  Symbol encode(std::span<const Symbol> coordinates) const;
  std::vector<Symbol> decode(Symbol state) const;
  Symbol diagonal_state(Symbol a) const;  // a (l^N - 1) / (l - 1)
};

/// Throws AlphabetMismatch, NotPrimitive, ProductTooLarge (l^N > 10^4 states or more than
/// 5 10^7 product transitions), InvalidArgument for N < 2.
ProductSystem build_product(const std::vector<BlockPotential>& factors);

struct DiagonalSubsystem {
  std::shared_ptr<const ProductSystem> product;
  SubAlphabet diagonal;
  SubsystemSolution solution;  // on the normalized product potential
  double p_star = 0.0;         // P_{phi_Delta} - P(phi)
  MarkedPoissonParams params;
};

DiagonalSubsystem diagonal_matching(std::shared_ptr<const ProductSystem> product);

/// ceil(log eps / P_star), at least 1. `clamped` reports the lower clamp.
std::size_t epsilon_to_n(double epsilon, double p_star, bool* clamped = nullptr);

/// Bernoulli potential phi(a,b) = log p_a on the full shift with the given probabilities.
BlockPotential bernoulli_potential(const std::vector<double>& probabilities);

/// Simultaneous n-matchings of N independently sampled factor orbits of length T.
/// Factor i draws from seed derive_seed(seed, i).
PointProcessSample simulate_matching_direct(const ProductSystem& product, const ClusterConfig& config,
                                            std::uint64_t length, std::uint64_t seed);

/// The same process through an orbit of the product chain.
PointProcessSample simulate_matching_product(const DiagonalSubsystem& diagonal,
                                             const ClusterConfig& config, std::uint64_t length,
                                             std::uint64_t seed);

}  // namespace hitlaw
