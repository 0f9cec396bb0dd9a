#pragma once

// Transfer-operator data for 2-block potentials phi(x0, x1) on a subshift of
// finite type. With K(a,b) = A(a,b) e^{phi(a,b)}, the transfer operator acts
// on 1-block functions as (L psi)(b) = sum_a K(a,b) psi(a), i.e. L = K^T.
// Its Perron eigenfunction is the left Perron vector of K.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hitlaw/linalg.hpp"
#include "hitlaw/rng.hpp"
#include "hitlaw/sft.hpp"

namespace hitlaw {

class BlockPotential {
 public:
  /// One weight per allowed transition, in the system's CSR edge order.
  BlockPotential(SystemPtr system, Vector edge_weights, bool normalized = false);

  static BlockPotential constant(SystemPtr system, double value);
  /// Dense l x l table; entries on disallowed transitions are ignored.
  static BlockPotential from_dense(SystemPtr system, const std::vector<std::vector<double>>& weights);
  /// k-block potential on the (k-1)-block recoding: weight(u,v) = f(u followed by last symbol of v).
  static BlockPotential from_blocks(SystemPtr recoded, const RecodingMap& map,
                                    const std::function<double(std::span<const Symbol>)>& f);

  const SystemPtr& system() const noexcept { return system_; }
  std::span<const double> edge_weights() const noexcept { return weights_; }
  /// phi(a,b); -infinity when (a,b) is not allowed.
  double weight(Symbol a, Symbol b) const noexcept;
  bool normalized() const noexcept { return normalized_; }

  /// max_b |sum_a K(a,b) - 1|, zero iff L fixes the constant function 1.
  double normalization_defect() const;

  /// K(a,b) = e^{phi(a,b) - shift} in CSR form.
  CsrMatrix exp_matrix(double shift = 0.0) const;
  /// L as a matrix on 1-block functions: (L psi) = operator_matrix() * psi.
  CsrMatrix operator_matrix() const;

 private:
  SystemPtr system_;
  Vector weights_;
  bool normalized_ = false;
};

struct ThermoSolution {
  BlockPotential potential;
  double pressure = 0.0;
  Vector right;       // K w = e^P w, unit 1-norm
  Vector left;        // u^T K = e^P u^T, unit 1-norm; the eigenfunction of L
  Vector stationary;  // p_a = u_a w_a / u^T w
  CsrMatrix transition;  // Q(a,b) = K(a,b) w_b / (e^P w_a)
  double residual = 0.0;

  const TransitionSystem& system() const noexcept { return *potential.system(); }
  /// integral of a 1-block function.
  double integrate(std::span<const double> psi) const;
};

/// Throws NotPrimitive / NoConvergence from perron.
ThermoSolution pressure(const BlockPotential& potential, const PerronOptions& options = {});

/// phi' = phi - P + log u(x0) - log u(x1): pressure 0, L 1 = 1, same equilibrium state.
BlockPotential normalize(const BlockPotential& potential, const PerronOptions& options = {});

struct CylinderMeasure {
  Word word;
  double mass = 0.0;
  double log_mass = 0.0;
};

/// mass = p_{x0} prod Q(x_i, x_{i+1}) accumulated in log space. The empty word is the full space.
CylinderMeasure cylinder_measure(const ThermoSolution& solution, const Word& word);

/// Draws from the equilibrium Markov chain with integer thresholds, so a given
/// seed gives the same stream everywhere.
class MarkovSampler {
 public:
  explicit MarkovSampler(const ThermoSolution& solution);

  Symbol initial(Rng& rng) const noexcept;
  Symbol step(Symbol from, Rng& rng) const noexcept;
  std::size_t size() const noexcept { return initial_.size(); }

 private:
  std::vector<std::uint64_t> initial_;
  std::vector<std::size_t> offsets_;
  std::vector<Symbol> targets_;
  std::vector<std::uint64_t> thresholds_;
};

/// Consecutive chunks of one equilibrium orbit.
class OrbitStream {
 public:
  OrbitStream(const MarkovSampler& sampler, std::uint64_t seed);
  void generate(std::span<Symbol> out);

 private:
  const MarkovSampler* sampler_;
  Rng rng_;
  Symbol state_ = 0;
  bool started_ = false;
};

std::vector<Symbol> sample_orbit(const ThermoSolution& solution, std::size_t length, std::uint64_t seed);

}  // namespace hitlaw
