#pragma once

// Restricted transfer operator L_Delta psi = L(psi * 1_Delta) on a normalized
// potential, its eigenfunction h_Delta, the Pianigiani-Yorke measure
// mu_PY = h_Delta dmu and the marked-Poisson parameters of hitting times of
// Delta_n (the set of points whose first n symbols lie in Delta).

#include <cstddef>
#include <optional>
#include <vector>

#include "hitlaw/linalg.hpp"
#include "hitlaw/sft.hpp"
#include "hitlaw/thermo.hpp"

namespace hitlaw {

struct SubsystemSolution {
  SubAlphabet sub;
  ThermoSolution full;          // normalized potential, pressure 0
  double pressure_delta = 0.0;  // P_Delta < 0
  double beta = 0.0;            // e^{P_Delta}
  Vector w_delta;               // on members(), limit of e^{-nP_Delta} L_{phi_Delta}^n 1
  Vector h;                     // on the full alphabet; support is Z_Delta
  std::vector<Symbol> zdelta;
  ThermoSolution restricted;  // equilibrium state mu_Delta of phi restricted to Delta
  /// Probability eigenmeasure nu_Delta of the dual of L_{phi_Delta} on 1-cylinders
  /// (members() order). The scale-free limit of e^{-nP}L_Delta^n psi is
  /// h_Delta * integral psi d nu_Delta.
  Vector eigenmeasure;
  double total_mass = 0.0;       // c = integral h_Delta dmu = mu_PY(whole space)
  CsrMatrix restricted_operator;  // matrix of L_Delta on 1-block functions
  double eigen_residual = 0.0;    // |L_Delta h - e^{P_Delta} h|_inf

  std::size_t alphabet_size() const noexcept { return h.size(); }
};

/// Throws NotNormalized (|P| > 1e-10) and SubsystemNotMixing.
SubsystemSolution solve_subsystem(const ThermoSolution& full, const SubAlphabet& sub,
                                  const PerronOptions& options = {});

/// L_Delta applied to a 1-block function.
Vector apply_restricted(const SubsystemSolution& solution, std::span<const double> psi);

/// e^{-nP_Delta} L_Delta^n 1, the iterative construction of h_Delta.
Vector iterate_h(const SubsystemSolution& solution, std::size_t steps);

struct MarkedPoissonParams {
  double lambda = 0.0;
  double ratio = 0.0;  // e^{P_Delta} = theta / (1 + theta), the geometric ratio of pi
  double theta = 0.0;  // cluster constant ratio (e^{-P_Delta} - 1)^{-1}
  Vector pi;           // pi_1 .. pi_J
  double consistency_residual = 0.0;

  double pi_at(std::size_t j) const;  // j >= 1, closed form
  double tail(std::size_t terms) const noexcept;  // sum_{j > terms} pi_j
};

MarkedPoissonParams marked_poisson_params(const SubsystemSolution& solution, std::size_t terms = 64);

struct MuDeltaN {
  std::size_t n = 0;
  double value = 0.0;   // mu(Delta_n), matrix form
  double scaled = 0.0;  // e^{-nP_Delta} mu(Delta_n)
  std::optional<double> by_enumeration;  // cylinder sum, n <= 12
  bool consistent = true;                // |value - by_enumeration| <= 1e-10
};

MuDeltaN mu_delta_n(const SubsystemSolution& solution, std::size_t n);

/// a_j = e^{-jP_Delta} mu(Delta_j) for j = 0..max_n (a_0 = 1).
Vector scaled_delta_masses(const SubsystemSolution& solution, std::size_t max_n);

struct ConvergenceReport {
  double target = 0.0;
  Vector values;  // index i holds step first_step + i
  Vector errors;
  std::size_t first_step = 1;
  double final_error = 0.0;
  double rate = 0.0;  // fitted geometric rate of the errors; 0 when exact
  bool eventually_monotone = true;
  double tolerance = 0.0;
  bool pass = false;
};

ConvergenceReport make_convergence_report(Vector values, double target, double tolerance,
                                          std::size_t first_step = 1);

/// e^{-nP_Delta} mu(Delta_{n+s}) -> e^{sP_Delta} c, n = 1..max_n.
ConvergenceReport dels_limit_check(const SubsystemSolution& solution, std::size_t s,
                                   std::size_t max_n = 40, double tolerance = 1e-8);

struct ClusterConstant {
  std::size_t m = 1;
  std::size_t n = 0;
  std::size_t window = 0;
  double tilde = 0.0;              // C~_m(n)
  double value = 0.0;              // C_m(n) = e^{-nP_Delta} * windowed sum
  double tilde_limit = 0.0;        // theta^{m-1}
  double value_limit = 0.0;        // c theta^{m-1}
  double tilde_relative_error = 0.0;
  double value_relative_error = 0.0;
};

/// Windowed m-fold intersection sums, gaps q_s - q_{s-1} in [1, window].
/// window = 0 selects floor(n/m). Throws CombinatorialOverflow.
ClusterConstant exact_cluster_constants(const SubsystemSolution& solution, std::size_t m,
                                        std::size_t n, std::size_t window = 0);

/// mu_PY of a cylinder: h_Delta(x_0) mu([word]); the empty word gives c.
double py_measure(const SubsystemSolution& solution, const Word& word);

struct IdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// mu_PY(B) = e^{-P_Delta} mu_PY(S^{-1}B cap Delta) for the cylinder B.
IdentityReport quasi_stationarity_check(const SubsystemSolution& solution, const Word& word,
                                        double tolerance = 1e-10);

/// mu(S^{-k}B | Delta_k) -> mu_PY(B) / mu_PY(whole space), k = 1..max_k.
ConvergenceReport conditional_limit_check(const SubsystemSolution& solution, const Word& word,
                                          std::size_t max_k = 40, double tolerance = 1e-8);

struct EquilibriumLimitReport {
  ConvergenceReport initial;   // mu(B | Delta_n) -> nu_Delta(B)
  ConvergenceReport midpoint;  // mu(S^{-j}B | Delta_n), j ~ n/2 -> mu_Delta(B)
  double mu_delta = 0.0;       // mu_Delta(B)
  double nu_delta = 0.0;       // nu_Delta(B)
  double literal_error = 0.0;  // |mu(B | Delta_nMax) - mu_Delta(B)|
  bool pass = false;
};

EquilibriumLimitReport subsystem_equilibrium_limit_check(const SubsystemSolution& solution,
                                                         const Word& word, std::size_t max_n = 30,
                                                         double tolerance = 1e-6);

struct CmsReport {
  ConvergenceReport convergence;  // errors |e^{-nP}L_D^n psi - h nu_D(psi)|_inf
  double nu_integral = 0.0;
  double mu_integral = 0.0;
  double literal_error = 0.0;  // same sup-norm error at max_n with mu_Delta(psi)
};

CmsReport cms_convergence_check(const SubsystemSolution& solution, std::span<const double> psi,
                                std::size_t max_n = 60, double tolerance = 1e-8);

struct DecayWord {
  Word word;
  Vector correlations;  // r = 1..max_r
  double rate = 0.0;
  double constant = 0.0;             // K with corr_r <= K rate^r
  double normalized_constant = 0.0;  // K / (e^{sP_Delta} mu(B))
};

struct DecayReport {
  std::size_t s = 0;
  std::vector<DecayWord> words;
  double gamma = 0.0;
  double uniformity = 1.0;  // max / min normalized constant
  bool pass = false;
};

/// |E(1_{Delta_s} 1_B o S^{s+r}) - mu(Delta_s) mu(B)| for r = 1..max_r.
DecayReport relativised_decay_check(const SubsystemSolution& solution, std::size_t s,
                                    std::size_t max_r, const std::vector<Word>& words);

}  // namespace hitlaw
