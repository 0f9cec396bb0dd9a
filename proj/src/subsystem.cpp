#include "hitlaw/subsystem.hpp"

#include <algorithm>
#include <cmath>

#include "hitlaw/error.hpp"

namespace hitlaw {

namespace {

// Least-squares slope of log(errors) against step over entries above `floor`.
// Returns 0 when fewer than three entries stay above the floor.
double fitted_rate(std::span<const double> errors, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i] <= floor) continue;
    const double x = static_cast<double>(i);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 3) return 0.0;
  const double k = static_cast<double>(count);
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return std::exp((k * sxy - sx * sy) / denom);
}

double exp_weight(const BlockPotential& phi, Symbol a, Symbol b) { return std::exp(phi.weight(a, b)); }

}  // namespace

ConvergenceReport make_convergence_report(Vector values, double target, double tolerance,
                                          std::size_t first_step) {
  ConvergenceReport report;
  report.target = target;
  report.tolerance = tolerance;
  report.first_step = first_step;
  report.values = std::move(values);
  report.errors.resize(report.values.size());
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    report.errors[i] = std::abs(report.values[i] - target);
  }
  const double floor = 1e-14 * std::max(1.0, std::abs(target));
  report.final_error = report.errors.empty() ? 0.0 : report.errors.back();
  report.rate = fitted_rate(report.errors, floor);
  for (std::size_t i = report.errors.size() / 2; i + 1 < report.errors.size(); ++i) {
    if (report.errors[i + 1] > report.errors[i] * (1.0 + 1e-6) + floor) {
      report.eventually_monotone = false;
    }
  }
  report.pass = !report.errors.empty() && report.final_error <= tolerance;
  return report;
}

// ---------------------------------------------------------------------------

SubsystemSolution solve_subsystem(const ThermoSolution& full, const SubAlphabet& sub,
                                  const PerronOptions& options) {
  const auto& system = full.system();
  if (sub.parent()->size() != system.size() || sub.parent()->transitions() != system.transitions()) {
    throw Error(ErrorCode::InvalidArgument, "sub-alphabet belongs to a different system");
  }
  if (std::abs(full.pressure) > 1e-10 || full.potential.normalization_defect() > 1e-10) {
    throw Error(ErrorCode::NotNormalized, "solve_subsystem needs a normalized potential");
  }
  if (!sub.mixing()) {
    throw Error(ErrorCode::SubsystemNotMixing, "A_Delta is not irreducible and aperiodic");
  }
  const auto& phi = full.potential;
  const std::size_t n = system.size();
  const std::size_t d = sub.size();

  // K_Delta(i,j) = e^{phi(a_i, a_j)} on Delta x Delta.
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  for (std::size_t i = 0; i < d; ++i) {
    const Symbol a = sub.members()[i];
    for (Symbol b : system.successors(a)) {
      if (!sub.contains(b)) continue;
      indices.push_back(static_cast<std::uint32_t>(sub.local_index(b)));
      values.push_back(exp_weight(phi, a, b));
    }
    offsets.push_back(indices.size());
  }
  const CsrMatrix k_delta(d, d, std::move(offsets), std::move(indices), std::move(values));
  const PerronResult perron_data = perron(k_delta, true, options);

  SubsystemSolution sol{sub, full, std::log(perron_data.eigenvalue), perron_data.eigenvalue,
                        {}, {}, compute_zdelta(sub), full, {}, 0.0, {}, 0.0};
  const Vector& r = perron_data.right;
  const Vector& l = perron_data.left;
  // e^{-nP} (K_D^T)^n 1 -> l (r^T 1) / (r^T l)
  const double scale = sum(r) / kernels::dot(r, l);
  sol.w_delta.resize(d);
  for (std::size_t i = 0; i < d; ++i) sol.w_delta[i] = l[i] * scale;
  const double mass_r = sum(r);
  sol.eigenmeasure.resize(d);
  for (std::size_t i = 0; i < d; ++i) sol.eigenmeasure[i] = r[i] / mass_r;

  // Matrix of L_Delta: row a holds K(b,a) for b in Delta.
  const CsrMatrix op = phi.operator_matrix();
  std::vector<std::size_t> op_offsets{0};
  std::vector<std::uint32_t> op_indices;
  std::vector<double> op_values;
  for (std::size_t a = 0; a < n; ++a) {
    const auto cols = op.row_indices(a);
    const auto vals = op.row_values(a);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      if (!sub.contains(cols[e])) continue;
      op_indices.push_back(cols[e]);
      op_values.push_back(vals[e]);
    }
    op_offsets.push_back(op_indices.size());
  }
  sol.restricted_operator =
      CsrMatrix(n, n, std::move(op_offsets), std::move(op_indices), std::move(op_values));

  Vector w_full(n, 0.0);
  for (std::size_t i = 0; i < d; ++i) w_full[sub.members()[i]] = sol.w_delta[i];
  sol.h = sol.restricted_operator.multiply(w_full);
  for (double& x : sol.h) x /= sol.beta;
  // Off Z_Delta the row of L_Delta is empty, so h vanishes exactly there.

  const Vector lh = sol.restricted_operator.multiply(sol.h);
  double residual = 0.0;
  for (std::size_t a = 0; a < n; ++a) residual = std::max(residual, std::abs(lh[a] - sol.beta * sol.h[a]));
  sol.eigen_residual = residual;
  sol.total_mass = full.integrate(sol.h);

  // mu_Delta from its own Perron data on (A_Delta, phi restricted).
  const SystemPtr restricted = restricted_system(sub);
  Vector restricted_weights(restricted->transitions());
  for (Symbol i = 0; i < d; ++i) {
    for (Symbol j : restricted->successors(i)) {
      restricted_weights[*restricted->edge_index(i, j)] = phi.weight(sub.members()[i], sub.members()[j]);
    }
  }
  sol.restricted = pressure(BlockPotential(restricted, std::move(restricted_weights)), options);
  return sol;
}

Vector apply_restricted(const SubsystemSolution& solution, std::span<const double> psi) {
  return solution.restricted_operator.multiply(psi);
}

Vector iterate_h(const SubsystemSolution& solution, std::size_t steps) {
  Vector v(solution.alphabet_size(), 1.0);
  Vector next(v.size());
  for (std::size_t i = 0; i < steps; ++i) {
    solution.restricted_operator.multiply(v, next);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = next[a] / solution.beta;
  }
  return v;
}

// ---------------------------------------------------------------------------

double MarkedPoissonParams::pi_at(std::size_t j) const {
  if (j == 0) throw Error(ErrorCode::InvalidArgument, "marks start at 1");
  return (1.0 - ratio) * std::pow(ratio, static_cast<double>(j - 1));
}

double MarkedPoissonParams::tail(std::size_t terms) const noexcept {
  return std::pow(ratio, static_cast<double>(terms));
}

MarkedPoissonParams marked_poisson_params(const SubsystemSolution& solution, std::size_t terms) {
  const double p = solution.pressure_delta;
  const double one_minus_beta = -std::expm1(p);  // 1 - e^{P_Delta}
  MarkedPoissonParams params;
  params.ratio = solution.beta;
  params.lambda = one_minus_beta * solution.total_mass;
  params.theta = 1.0 / std::expm1(-p);
  params.pi.resize(terms);
  for (std::size_t j = 1; j <= terms; ++j) {
    params.pi[j - 1] = one_minus_beta * std::exp(static_cast<double>(j - 1) * p);
  }
  // Same parameters through c / (1 + theta) and theta^{j-1} / (1 + theta)^j.
  const double theta = params.theta;
  double residual = std::abs(params.lambda - solution.total_mass / (1.0 + theta));
  for (std::size_t j = 1; j <= terms; ++j) {
    const double alt = std::pow(theta, static_cast<double>(j - 1)) / std::pow(1.0 + theta, static_cast<double>(j));
    residual = std::max(residual, std::abs(params.pi[j - 1] - alt));
  }
  params.consistency_residual = residual;
  return params;
}

// ---------------------------------------------------------------------------

Vector scaled_delta_masses(const SubsystemSolution& solution, std::size_t max_n) {
  Vector out(max_n + 1);
  out[0] = 1.0;
  Vector v(solution.alphabet_size(), 1.0);
  Vector next(v.size());
  for (std::size_t j = 1; j <= max_n; ++j) {
    solution.restricted_operator.multiply(v, next);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = next[a] / solution.beta;
    out[j] = solution.full.integrate(v);
  }
  return out;
}

MuDeltaN mu_delta_n(const SubsystemSolution& solution, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  MuDeltaN out;
  out.n = n;
  out.scaled = scaled_delta_masses(solution, n)[n];
  out.value = out.scaled * std::exp(static_cast<double>(n) * solution.pressure_delta);
  if (n <= 12) {
    auto words = enumerate_words(solution.full.potential.system(), n, &solution.sub);
    double total = 0.0;
    while (auto w = words.next()) total += cylinder_measure(solution.full, *w).mass;
    out.by_enumeration = total;
    out.consistent = std::abs(total - out.value) <= 1e-10;
  }
  return out;
}

ConvergenceReport dels_limit_check(const SubsystemSolution& solution, std::size_t s,
                                   std::size_t max_n, double tolerance) {
  const Vector a = scaled_delta_masses(solution, max_n + s);
  const double beta_s = std::pow(solution.beta, static_cast<double>(s));
  Vector values(max_n);
  for (std::size_t n = 1; n <= max_n; ++n) values[n - 1] = beta_s * a[n + s];
  auto report = make_convergence_report(std::move(values), beta_s * solution.total_mass, tolerance);
  report.pass = report.pass && report.eventually_monotone;
  return report;
}

ClusterConstant exact_cluster_constants(const SubsystemSolution& solution, std::size_t m,
                                        std::size_t n, std::size_t window) {
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "m and n must be >= 1");
  if (window == 0) window = std::max<std::size_t>(1, n / m);
  const std::size_t parts = m - 1;
  const std::size_t q_max = parts * window;
  if (q_max > 10'000'000) {
    throw Error(ErrorCode::CombinatorialOverflow, "gap range exceeds 1e7");
  }
  // ways[q] = number of compositions of q into `parts` gaps, each in [1, window].
  Vector ways(q_max + 1, 0.0);
  ways[0] = 1.0;
  for (std::size_t p = 0; p < parts; ++p) {
    Vector next(q_max + 1, 0.0);
    for (std::size_t q = 0; q <= q_max; ++q) {
      if (ways[q] == 0.0) continue;
      for (std::size_t g = 1; g <= window && q + g <= q_max; ++g) next[q + g] += ways[q];
    }
    ways.swap(next);
  }
  const Vector a = scaled_delta_masses(solution, n + q_max);
  double value = 0.0;
  for (std::size_t q = 0; q <= q_max; ++q) {
    if (ways[q] != 0.0) value += ways[q] * std::pow(solution.beta, static_cast<double>(q)) * a[n + q];
  }
  ClusterConstant out;
  out.m = m;
  out.n = n;
  out.window = window;
  out.value = value;
  out.tilde = value / a[n];
  const double theta = 1.0 / std::expm1(-solution.pressure_delta);
  out.tilde_limit = std::pow(theta, static_cast<double>(parts));
  out.value_limit = solution.total_mass * out.tilde_limit;
  out.tilde_relative_error = std::abs(out.tilde - out.tilde_limit) / out.tilde_limit;
  out.value_relative_error = std::abs(out.value - out.value_limit) / out.value_limit;
  return out;
}

// ---------------------------------------------------------------------------

double py_measure(const SubsystemSolution& solution, const Word& word) {
  require_allowed(solution.full.system(), word);
  if (word.empty()) return solution.total_mass;
  return solution.h[word.symbols.front()] * cylinder_measure(solution.full, word).mass;
}

IdentityReport quasi_stationarity_check(const SubsystemSolution& solution, const Word& word,
                                        double tolerance) {
  const auto& system = solution.full.system();
  require_allowed(system, word);
  IdentityReport report;
  report.tolerance = tolerance;
  report.lhs = py_measure(solution, word);
  double preimage = 0.0;
  for (Symbol a : solution.sub.members()) {
    if (!word.empty() && !system.allowed(a, word.symbols.front())) continue;
    Word extended;
    extended.symbols.reserve(word.size() + 1);
    extended.symbols.push_back(a);
    extended.symbols.insert(extended.symbols.end(), word.symbols.begin(), word.symbols.end());
    preimage += py_measure(solution, extended);
  }
  report.rhs = preimage / solution.beta;
  report.residual = std::abs(report.lhs - report.rhs);
  report.pass = report.residual <= tolerance;
  return report;
}

ConvergenceReport conditional_limit_check(const SubsystemSolution& solution, const Word& word,
                                          std::size_t max_k, double tolerance) {
  require_allowed(solution.full.system(), word);
  const double mass = word.empty() ? 1.0 : cylinder_measure(solution.full, word).mass;
  Vector v(solution.alphabet_size(), 1.0);
  Vector next(v.size());
  Vector values(max_k);
  for (std::size_t k = 1; k <= max_k; ++k) {
    solution.restricted_operator.multiply(v, next);
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = next[a] / solution.beta;
    const double total = solution.full.integrate(v);
    values[k - 1] = word.empty() ? 1.0 : v[word.symbols.front()] * mass / total;
  }
  return make_convergence_report(std::move(values), py_measure(solution, word) / solution.total_mass,
                                 tolerance);
}

EquilibriumLimitReport subsystem_equilibrium_limit_check(const SubsystemSolution& solution,
                                                         const Word& word, std::size_t max_n,
                                                         double tolerance) {
  const auto& system = solution.full.system();
  require_allowed(system, word);
  if (word.empty()) throw Error(ErrorCode::InvalidArgument, "need a nonempty cylinder");
  const auto& sub = solution.sub;
  const std::size_t d = sub.size();
  const std::size_t len = word.size();
  const double beta = solution.beta;
  const auto& q = solution.full.transition;
  const double mass = cylinder_measure(solution.full, word).mass;

  EquilibriumLimitReport report;
  std::size_t inside = 0;  // length of the prefix of the word lying in Delta
  while (inside < len && sub.contains(word.symbols[inside])) ++inside;

  // Targets.
  if (inside == len) {
    Word local;
    double log_weight = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      local.symbols.push_back(static_cast<Symbol>(sub.local_index(word.symbols[i])));
      if (i > 0) log_weight += solution.full.potential.weight(word.symbols[i - 1], word.symbols[i]);
    }
    report.mu_delta = cylinder_measure(solution.restricted, local).mass;
    report.nu_delta = std::exp(log_weight - static_cast<double>(len - 1) * solution.pressure_delta) *
                      solution.eigenmeasure[local.symbols.back()];
  }

  // Scaled backward vectors g_j = Q_D^j 1 / beta^j and forward f_j = p_D Q_D^j / beta^j on Delta.
  std::vector<Vector> g(max_n, Vector(d, 0.0));
  std::vector<Vector> f(max_n, Vector(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    g[0][i] = 1.0;
    f[0][i] = solution.full.stationary[sub.members()[i]];
  }
  for (std::size_t j = 1; j < max_n; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      const Symbol a = sub.members()[i];
      const auto cols = q.row_indices(a);
      const auto vals = q.row_values(a);
      double acc = 0.0;
      for (std::size_t e = 0; e < cols.size(); ++e) {
        const std::size_t k = sub.local_index(cols[e]);
        if (k == SubAlphabet::npos) continue;
        acc += vals[e] * g[j - 1][k];
        f[j][k] += f[j - 1][i] * vals[e] / beta;
      }
      g[j][i] = acc / beta;
    }
  }
  auto mass_delta = [&](std::size_t n) {  // mu(Delta_n) / beta^{n-1}
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += f[0][i] * g[n - 1][i];
    return total;
  };

  Vector initial(max_n);
  for (std::size_t n = 1; n <= max_n; ++n) {
    const double denom = mass_delta(n);
    if (inside < std::min(n, len)) {
      initial[n - 1] = 0.0;
    } else if (len >= n) {
      initial[n - 1] = mass / (std::pow(beta, static_cast<double>(n - 1)) * denom);
    } else {
      const double tail = g[n - len][sub.local_index(word.symbols.back())];
      initial[n - 1] = mass * tail / (std::pow(beta, static_cast<double>(len - 1)) * denom);
    }
  }
  report.initial = make_convergence_report(std::move(initial), report.nu_delta, tolerance);

  Vector midpoint;
  for (std::size_t n = len; n <= max_n; ++n) {
    if (inside < len) {
      midpoint.push_back(0.0);
      continue;
    }
    const std::size_t j = (n - len) / 2;
    const double path = mass / solution.full.stationary[word.symbols.front()];
    const double head = f[j][sub.local_index(word.symbols.front())];
    const double tail = g[n - 1 - j - (len - 1)][sub.local_index(word.symbols.back())];
    midpoint.push_back(head * path * tail / (std::pow(beta, static_cast<double>(len - 1)) * mass_delta(n)));
  }
  report.midpoint = make_convergence_report(std::move(midpoint), report.mu_delta, tolerance, len);
  report.literal_error = std::abs(report.initial.values.back() - report.mu_delta);
  report.pass = report.initial.pass && report.midpoint.pass;
  return report;
}

CmsReport cms_convergence_check(const SubsystemSolution& solution, std::span<const double> psi,
                                std::size_t max_n, double tolerance) {
  CmsReport report;
  const auto& sub = solution.sub;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    report.nu_integral += solution.eigenmeasure[i] * psi[sub.members()[i]];
    report.mu_integral += solution.restricted.stationary[i] * psi[sub.members()[i]];
  }
  Vector x(psi.begin(), psi.end());
  Vector next(x.size());
  Vector errors(max_n);
  double literal = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    solution.restricted_operator.multiply(x, next);
    double err = 0.0;
    literal = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      x[a] = next[a] / solution.beta;
      err = std::max(err, std::abs(x[a] - solution.h[a] * report.nu_integral));
      literal = std::max(literal, std::abs(x[a] - solution.h[a] * report.mu_integral));
    }
    errors[n - 1] = err;
  }
  report.convergence = make_convergence_report(std::move(errors), 0.0, tolerance);
  report.literal_error = literal;
  return report;
}

DecayReport relativised_decay_check(const SubsystemSolution& solution, std::size_t s,
                                    std::size_t max_r, const std::vector<Word>& words) {
  if (s == 0) throw Error(ErrorCode::InvalidArgument, "s must be >= 1");
  DecayReport report;
  report.s = s;
  Vector f0(solution.alphabet_size(), 1.0);
  Vector next(f0.size());
  for (std::size_t i = 0; i < s; ++i) {
    solution.restricted_operator.multiply(f0, next);
    f0.swap(next);
  }
  const double mu_ds = solution.full.integrate(f0);
  const CsrMatrix op = solution.full.potential.operator_matrix();
  const double beta_s = std::pow(solution.beta, static_cast<double>(s));

  double lo = INFINITY, hi = 0.0;
  for (const Word& word : words) {
    require_allowed(solution.full.system(), word);
    if (word.empty()) throw Error(ErrorCode::InvalidArgument, "need nonempty test words");
    DecayWord entry;
    entry.word = word;
    const double mass = cylinder_measure(solution.full, word).mass;
    Vector f = f0;
    entry.correlations.resize(max_r);
    for (std::size_t r = 1; r <= max_r; ++r) {
      op.multiply(f, next);
      f.swap(next);
      entry.correlations[r - 1] = std::abs(f[word.symbols.front()] - mu_ds) * mass;
    }
    const double scale = beta_s * mass;
    entry.rate = fitted_rate(entry.correlations, 1e-12 * scale);
    for (std::size_t r = 1; r <= max_r; ++r) {
      const double bound = entry.rate > 0.0
                               ? entry.correlations[r - 1] / std::pow(entry.rate, static_cast<double>(r))
                               : entry.correlations[r - 1];
      entry.constant = std::max(entry.constant, bound);
    }
    if (entry.rate == 0.0) entry.constant = 0.0;
    entry.normalized_constant = entry.constant / scale;
    report.gamma = std::max(report.gamma, entry.rate);
    if (entry.normalized_constant > 0.0) {
      lo = std::min(lo, entry.normalized_constant);
      hi = std::max(hi, entry.normalized_constant);
    }
    report.words.push_back(std::move(entry));
  }
  report.uniformity = hi > 0.0 ? hi / lo : 1.0;
  report.pass = report.gamma < 1.0 && report.uniformity <= 10.0;
  return report;
}

}  // namespace hitlaw
