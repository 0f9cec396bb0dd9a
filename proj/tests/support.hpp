#pragma once

// Dense reference computations shared by the unit tests.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hitlaw/sft.hpp"
#include "hitlaw/thermo.hpp"

namespace hitlaw::testing {

inline const std::vector<std::vector<int>> kBand{{1, 1, 0, 0}, {1, 1, 1, 0}, {0, 1, 1, 1}, {0, 0, 1, 1}};
inline const std::vector<std::vector<int>> kGolden{{1, 1}, {1, 0}};

inline std::vector<std::vector<int>> full(std::size_t l) {
  return std::vector<std::vector<int>>(l, std::vector<int>(l, 1));
}

inline ThermoSolution uniform_solution(const SystemPtr& system) {
  return pressure(normalize(BlockPotential::constant(system, 0.0)));
}

inline SubAlphabet sub_of(const SystemPtr& system, std::vector<Symbol> members) {
  return build_subalphabet(system, std::span<const Symbol>(members));
}

/// Markov transition matrix Q of a solution.
inline Eigen::MatrixXd dense_transition(const ThermoSolution& s) {
  const std::size_t l = s.stationary.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(l, l);
  for (Symbol a = 0; a < l; ++a) {
    for (Symbol b : s.system().successors(a)) q(a, b) = s.transition.at(a, b);
  }
  return q;
}

inline Eigen::VectorXd dense_stationary(const ThermoSolution& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.stationary.data(), static_cast<Eigen::Index>(s.stationary.size()));
}

/// Diagonal 0-1 projection onto members.
inline Eigen::MatrixXd indicator(const SubAlphabet& sub) {
  const std::size_t l = sub.parent()->size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(l, l);
  for (Symbol a : sub.members()) d(a, a) = 1.0;
  return d;
}

/// mu(Delta_n) as p^T D (Q D)^{n-1} 1.
inline double dense_mu_delta_n(const ThermoSolution& s, const SubAlphabet& sub, std::size_t n) {
  const Eigen::MatrixXd d = indicator(sub);
  const Eigen::MatrixXd qd = dense_transition(s) * d;
  Eigen::RowVectorXd row = dense_stationary(s).transpose() * d;
  for (std::size_t i = 1; i < n; ++i) row = row * qd;
  return row.sum();
}

/// Dominant real eigenvalue of a square matrix.
inline double dominant_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
  double best = -1e300;
  for (Eigen::Index i = 0; i < m.rows(); ++i) best = std::max(best, solver.eigenvalues()[i].real());
  return best;
}

/// Matrix of the transfer operator on 1-block functions: (L psi)(b) = sum_a e^{phi(a,b)} psi(a).
inline Eigen::MatrixXd dense_operator(const ThermoSolution& s) {
  const std::size_t l = s.stationary.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l, l);
  for (Symbol a = 0; a < l; ++a) {
    for (Symbol b : s.system().successors(a)) m(b, a) = std::exp(s.potential.weight(a, b));
  }
  return m;
}

}  // namespace hitlaw::testing
