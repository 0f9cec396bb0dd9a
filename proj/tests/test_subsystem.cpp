#include <doctest.h>

#include <cmath>
#include <random>

#include "hitlaw/error.hpp"
#include "hitlaw/subsystem.hpp"
#include "support.hpp"

using namespace hitlaw;
using namespace hitlaw::testing;

namespace {

const double kGoldenRatio = (1.0 + std::sqrt(5.0)) / 2.0;

struct Fixture {
  SystemPtr system;
  ThermoSolution full;
  SubsystemSolution sub;
};

Fixture make(const std::vector<std::vector<int>>& a, std::vector<Symbol> members) {
  auto system = build_system(a);
  auto full = uniform_solution(system);
  auto sub = solve_subsystem(full, sub_of(system, std::move(members)));
  return {system, std::move(full), std::move(sub)};
}

Fixture random_potential(const std::vector<std::vector<int>>& a, std::vector<Symbol> members, std::uint64_t seed) {
  auto system = build_system(a);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.7);
  Vector w(system->transitions());
  for (auto& x : w) x = nd(rng);
  auto full = pressure(normalize(BlockPotential(system, w)));
  auto sub = solve_subsystem(full, sub_of(system, std::move(members)));
  return {system, std::move(full), std::move(sub)};
}

// beta^{-n} (L 1_Delta)^n psi for large n, from dense matrices.
Eigen::VectorXd dense_limit(const Fixture& f, const Eigen::VectorXd& psi, double* beta_out = nullptr) {
  const Eigen::MatrixXd op = dense_operator(f.full) * indicator(f.sub.sub);
  const double beta = dominant_eigenvalue(op);
  if (beta_out) *beta_out = beta;
  Eigen::VectorXd x = psi;
  for (int n = 0; n < 600; ++n) x = op * x / beta;
  return x;
}

// mu(B | Delta_n) and mu(S^{-k}B | Delta_k) through dense products.
double dense_conditional(const Fixture& f, const Word& b, std::size_t n, std::size_t shift) {
  const Eigen::MatrixXd q = dense_transition(f.full);
  const Eigen::MatrixXd d = indicator(f.sub.sub);
  const std::size_t l = f.system->size();
  // constraint on each position ahead of the word's end
  const std::size_t span = std::max(n, shift + b.size());
  Eigen::RowVectorXd row = dense_stationary(f.full).transpose();
  auto project = [&](std::size_t pos) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(l, l);
    if (pos < n) p = p * d;
    if (pos >= shift && pos < shift + b.size()) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(l, l);
      e(b.symbols[pos - shift], b.symbols[pos - shift]) = 1.0;
      p = p * e;
    }
    return p;
  };
  row = row * project(0);
  for (std::size_t pos = 1; pos < span; ++pos) row = row * q * project(pos);
  return row.sum() / dense_mu_delta_n(f.full, f.sub.sub, n);
}

}  // namespace

TEST_CASE("uniform 3-shift with two symbols") {
  const auto f = make(full(3), {0, 1});
  CHECK(f.sub.pressure_delta == doctest::Approx(std::log(2.0 / 3)).epsilon(1e-14));
  CHECK(f.sub.beta == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(f.sub.total_mass == doctest::Approx(1.0).epsilon(1e-13));
  for (double h : f.sub.h) CHECK(h == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(f.sub.zdelta == std::vector<Symbol>{0, 1, 2});
  for (double v : f.sub.eigenmeasure) CHECK(v == doctest::Approx(0.5));

  const auto params = marked_poisson_params(f.sub);
  CHECK(params.lambda == doctest::Approx(1.0 / 3).epsilon(1e-13));
  CHECK(params.theta == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(params.pi_at(1) == doctest::Approx(1.0 / 3));
  CHECK(params.pi_at(2) == doctest::Approx(2.0 / 9));
  CHECK(params.consistency_residual <= 1e-12);

  const auto m4 = mu_delta_n(f.sub, 4);
  CHECK(m4.value == doctest::Approx(16.0 / 81).epsilon(1e-14));
  REQUIRE(m4.by_enumeration);
  CHECK(*m4.by_enumeration == doctest::Approx(16.0 / 81).epsilon(1e-14));
  CHECK(m4.consistent);
  CHECK(m4.scaled == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(mu_delta_n(f.sub, 1).value == doctest::Approx(2.0 / 3));
  CHECK_FALSE(mu_delta_n(f.sub, 20).by_enumeration);
}

TEST_CASE("eigenfunction and parameters against dense oracles") {
  struct Case {
    std::vector<std::vector<int>> a;
    std::vector<Symbol> members;
    std::uint64_t seed;
  };
  const std::vector<Case> cases{
      {kBand, {0, 1}, 1}, {kBand, {1, 2}, 2}, {kBand, {0, 1, 2}, 3}, {full(3), {0, 1}, 4},
      {kGolden, {0}, 5},  {full(4), {0, 2}, 6}, {full(5), {1, 2, 3}, 7},
  };
  for (const auto& c : cases) {
    const auto f = random_potential(c.a, c.members, c.seed);
    const std::size_t l = f.system->size();
    double beta = 0.0;
    const Eigen::VectorXd h = dense_limit(f, Eigen::VectorXd::Ones(l), &beta);
    CHECK(f.sub.beta == doctest::Approx(beta).epsilon(1e-11));
    CHECK(f.sub.pressure_delta < 0.0);
    double c_oracle = 0.0;
    for (std::size_t a = 0; a < l; ++a) {
      CHECK(f.sub.h[a] == doctest::Approx(h[a]).epsilon(1e-9).scale(1e-12));
      c_oracle += h[a] * f.full.stationary[a];
    }
    CHECK(f.sub.total_mass == doctest::Approx(c_oracle).epsilon(1e-10));
    CHECK(f.sub.eigen_residual <= 1e-12);

    // support of h is Z_Delta, and h agrees with w_Delta on members
    const auto z = compute_zdelta(f.sub.sub);
    CHECK(f.sub.zdelta == z);
    for (Symbol a = 0; a < l; ++a) {
      const bool in_z = std::find(z.begin(), z.end(), a) != z.end();
      CHECK((f.sub.h[a] > 0.0) == in_z);
    }
    for (std::size_t i = 0; i < f.sub.sub.size(); ++i) {
      CHECK(f.sub.h[f.sub.sub.members()[i]] == doctest::Approx(f.sub.w_delta[i]).epsilon(1e-12));
    }
    const Vector it = iterate_h(f.sub, 400);
    for (std::size_t a = 0; a < l; ++a) CHECK(it[a] == doctest::Approx(f.sub.h[a]).epsilon(1e-10).scale(1e-12));

    // eigenmeasure: beta^{-n} L_Delta^n 1_a -> h nu(a)
    double nu_sum = 0.0;
    for (std::size_t i = 0; i < f.sub.sub.size(); ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(l);
      e[f.sub.sub.members()[i]] = 1.0;
      const Eigen::VectorXd lim = dense_limit(f, e);
      const Symbol top = f.sub.sub.members()[0];
      CHECK(f.sub.eigenmeasure[i] == doctest::Approx(lim[top] / h[top]).epsilon(1e-9));
      nu_sum += f.sub.eigenmeasure[i];
    }
    CHECK(nu_sum == doctest::Approx(1.0).epsilon(1e-12));

    // mu(Delta_n) by matrix form against the dense product
    for (std::size_t n : {1, 2, 5, 9, 17}) {
      const auto m = mu_delta_n(f.sub, n);
      CHECK(m.value == doctest::Approx(dense_mu_delta_n(f.full, f.sub.sub, n)).epsilon(1e-11));
      CHECK(m.consistent);
    }

    const auto params = marked_poisson_params(f.sub, 200);
    CHECK(params.lambda == doctest::Approx((1.0 - beta) * c_oracle).epsilon(1e-10));
    CHECK(params.theta == doctest::Approx(1.0 / (1.0 / beta - 1.0)).epsilon(1e-10));
    CHECK(params.ratio == doctest::Approx(params.theta / (1 + params.theta)).epsilon(1e-12));
    double sum = 0.0;
    for (std::size_t j = 1; j <= 200; ++j) {
      CHECK(params.pi_at(j) == doctest::Approx((1 - beta) * std::pow(beta, double(j - 1))).epsilon(1e-10).scale(1e-300));
      sum += params.pi_at(j);
    }
    CHECK(sum + params.tail(200) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(params.tail(3) == doctest::Approx(std::pow(beta, 3.0)).epsilon(1e-12));
    CHECK(params.consistency_residual <= 1e-10);
  }
}

TEST_CASE("restricted operator") {
  const auto f = random_potential(kBand, {0, 1}, 11);
  const Eigen::MatrixXd op = dense_operator(f.full) * indicator(f.sub.sub);
  const Vector psi{0.3, -1.2, 2.0, 0.7};
  const Vector out = apply_restricted(f.sub, psi);
  const Eigen::VectorXd ref = op * Eigen::Map<const Eigen::VectorXd>(psi.data(), 4);
  for (std::size_t a = 0; a < 4; ++a) CHECK(out[a] == doctest::Approx(ref[a]).epsilon(1e-13).scale(1e-15));
  const Vector lh = apply_restricted(f.sub, f.sub.h);
  for (std::size_t a = 0; a < 4; ++a) CHECK(lh[a] == doctest::Approx(f.sub.beta * f.sub.h[a]).epsilon(1e-12).scale(1e-15));
}

TEST_CASE("band matrix with delta {1,2}") {
  const auto f = make(kBand, {0, 1});
  CHECK(f.sub.zdelta == std::vector<Symbol>{0, 1, 2});
  CHECK(f.sub.h[3] == 0.0);
  CHECK(f.sub.beta == doctest::Approx(2.0 / (1.0 + kGoldenRatio)).epsilon(1e-13));
  // h proportional to (phi^2, phi, phi / 2, 0) before scaling
  CHECK(f.sub.h[0] / f.sub.h[1] == doctest::Approx(kGoldenRatio).epsilon(1e-12));
  CHECK(f.sub.h[2] / f.sub.h[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.sub.eigenmeasure[0] == doctest::Approx(1.0 / (kGoldenRatio * kGoldenRatio)).epsilon(1e-12));
  CHECK(f.sub.restricted.stationary[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("scaled masses converge") {
  const auto f = make(full(3), {0, 1});
  for (std::size_t s : {0, 1}) {
    const auto r = dels_limit_check(f.sub, s, 30);
    CHECK(r.pass);
    CHECK(r.target == doctest::Approx(std::pow(2.0 / 3, double(s))));
    CHECK(r.final_error <= 1e-12);
    CHECK(r.rate == 0.0);
  }
  const auto g = random_potential(kBand, {0, 1}, 80);
  const auto r = dels_limit_check(g.sub, 2, 40);
  CHECK(r.target == doctest::Approx(g.sub.beta * g.sub.beta * g.sub.total_mass).epsilon(1e-13));
  CHECK(r.pass);
  CHECK(r.eventually_monotone);
  CHECK(r.rate > 0.0);
  CHECK(r.rate < 1.0);
  const Vector a = scaled_delta_masses(g.sub, 10);
  CHECK(a.size() == 11);
  CHECK(a[0] == 1.0);
  for (std::size_t n = 1; n <= 10; ++n) {
    CHECK(a[n] == doctest::Approx(dense_mu_delta_n(g.full, g.sub.sub, n) / std::pow(g.sub.beta, double(n))).epsilon(1e-11));
  }
}

TEST_CASE("convergence report") {
  const auto r = make_convergence_report({1.5, 1.25, 1.125, 1.0625, 1.03125}, 1.0, 0.05);
  CHECK(r.pass);
  CHECK(r.rate == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.eventually_monotone);
  CHECK(r.final_error == doctest::Approx(0.03125));
  const auto bad = make_convergence_report({1.5, 1.25, 1.125}, 1.0, 0.01);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("cluster constants") {
  const auto f3 = make(full(3), {0, 1});
  const auto one = exact_cluster_constants(f3.sub, 1, 20);
  CHECK(one.tilde == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-12));

  // window floor(30/2) = 15: the sum over gaps q of (2/3)^q
  const auto two = exact_cluster_constants(f3.sub, 2, 30);
  CHECK(two.window == 15);
  CHECK(two.value == doctest::Approx(2.0 * (1.0 - std::pow(2.0 / 3, 15.0))).epsilon(1e-12));
  CHECK(two.value_limit == doctest::Approx(2.0));
  CHECK(two.tilde_limit == doctest::Approx(2.0));

  // 2-shift, one symbol, window 13: (sum_{g=1}^{13} 2^{-g})^2
  const auto f2 = make(full(2), {0});
  const auto three = exact_cluster_constants(f2.sub, 3, 40);
  CHECK(three.window == 13);
  CHECK(three.value == doctest::Approx(std::pow(1.0 - std::pow(2.0, -13.0), 2.0)).epsilon(1e-12));

  const auto wide = exact_cluster_constants(f3.sub, 4, 60, 60);
  CHECK(wide.value_relative_error <= 1e-9);
  CHECK(exact_cluster_constants(f3.sub, 4, 60).value_relative_error > 1e-3);

  // brute force on the band system: direct mu of the union of shifted cylinder sets
  const auto band = random_potential(kBand, {0, 1}, 21);
  const std::size_t n = 6, window = 3;
  double direct = 0.0;
  for (std::size_t g1 = 1; g1 <= window; ++g1) {
    for (std::size_t g2 = 1; g2 <= window; ++g2) {
      direct += dense_mu_delta_n(band.full, band.sub.sub, n + g1 + g2);
    }
  }
  const auto brute = exact_cluster_constants(band.sub, 3, n, window);
  CHECK(brute.value == doctest::Approx(direct / std::pow(band.sub.beta, double(n))).epsilon(1e-11));

  CHECK_THROWS_AS(exact_cluster_constants(f3.sub, 3, 20, 6'000'000), Error);
}

TEST_CASE("Pianigiani-Yorke measure identities") {
  const auto f3 = make(full(3), {0, 1});
  CHECK(py_measure(f3.sub, Word{{0, 1}}) == doctest::Approx(1.0 / 9));
  CHECK(py_measure(f3.sub, Word{}) == doctest::Approx(1.0));

  for (std::uint64_t seed : {31, 32, 33}) {
    const auto f = random_potential(kBand, {0, 1}, seed);
    for (std::size_t len : {1, 2, 3}) {
      auto words = enumerate_words(f.system, len);
      while (auto w = words.next()) {
        const auto qs = quasi_stationarity_check(f.sub, *w);
        CHECK(qs.pass);
        CHECK(qs.residual <= 1e-10);
      }
    }
    const double total = py_measure(f.sub, Word{});
    CHECK(total == doctest::Approx(f.sub.total_mass));
    auto words = enumerate_words(f.system, 2);
    double sum = 0.0;
    while (auto w = words.next()) sum += py_measure(f.sub, *w);
    CHECK(sum == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("conditional limit") {
  const auto g = make(kGolden, {0});
  const Word b{{1, 0}};
  const auto r = conditional_limit_check(g.sub, b);
  CHECK(r.pass);
  CHECK(r.target == doctest::Approx(py_measure(g.sub, b) / g.sub.total_mass));
  CHECK(r.values[24] == doctest::Approx(dense_conditional(g, b, 25, 25)).epsilon(1e-11));

  const auto f = random_potential(kBand, {1, 2}, 40);
  const Word c{{2, 3, 3}};
  const auto rc = conditional_limit_check(f.sub, c, 40);
  CHECK(rc.pass);
  for (std::size_t k : {1, 7, 20}) {
    CHECK(rc.values[k - rc.first_step] == doctest::Approx(dense_conditional(f, c, k, k)).epsilon(1e-10));
  }
}

TEST_CASE("conditioning on long runs in delta") {
  const auto f = make(kBand, {0, 1});
  const Word b{{0}};
  const auto r = subsystem_equilibrium_limit_check(f.sub, b, 30);
  CHECK(r.nu_delta == doctest::Approx(0.381966).epsilon(1e-6));
  CHECK(r.mu_delta == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.initial.target == doctest::Approx(r.nu_delta));
  CHECK(r.midpoint.target == doctest::Approx(r.mu_delta));
  CHECK(r.initial.pass);
  CHECK(r.midpoint.pass);
  CHECK(r.pass);
  CHECK(r.literal_error == doctest::Approx(0.5 - 0.381966).epsilon(1e-5));

  // enumeration oracle for mu(B | Delta_12)
  const auto sub = f.sub.sub;
  double num = 0.0, den = 0.0;
  auto words = enumerate_words(f.system, 12, &sub);
  while (auto w = words.next()) {
    const double m = cylinder_measure(f.full, *w).mass;
    den += m;
    if (w->symbols[0] == 0) num += m;
  }
  CHECK(r.initial.values[12 - r.initial.first_step] == doctest::Approx(num / den).epsilon(1e-12));
  CHECK(num / den == doctest::Approx(0.381966).epsilon(1e-5));
  CHECK(r.midpoint.values.back() == doctest::Approx(dense_conditional(f, b, 30, 14)).epsilon(1e-10));

  const auto g = random_potential(kBand, {0, 1, 2}, 50);
  const auto rg = subsystem_equilibrium_limit_check(g.sub, Word{{1, 2}}, 30);
  CHECK(rg.pass);
}

TEST_CASE("transfer operator iterates converge to h times nu") {
  const auto f = random_potential(kBand, {0, 1}, 60);
  std::mt19937_64 rng(61);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector psi(4);
    for (auto& x : psi) x = nd(rng);
    const auto r = cms_convergence_check(f.sub, psi);
    CHECK(r.convergence.pass);
    double nu = 0.0;
    for (std::size_t i = 0; i < 2; ++i) nu += psi[f.sub.sub.members()[i]] * f.sub.eigenmeasure[i];
    CHECK(r.nu_integral == doctest::Approx(nu).epsilon(1e-12));
    const Eigen::VectorXd lim = dense_limit(f, Eigen::Map<const Eigen::VectorXd>(psi.data(), 4));
    for (std::size_t a = 0; a < 4; ++a) CHECK(lim[a] == doctest::Approx(f.sub.h[a] * nu).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("relativised decay of correlations") {
  const auto f3 = make(full(3), {0, 1});
  std::vector<Word> words{Word{{0}}, Word{{2}}, Word{{1, 2}}};
  const auto r3 = relativised_decay_check(f3.sub, 3, 20, words);
  for (const auto& w : r3.words) {
    for (double c : w.correlations) CHECK(std::abs(c) <= 1e-15);
  }
  CHECK(r3.pass);

  const auto g = make(kGolden, {0});
  const auto rg = relativised_decay_check(g.sub, 3, 30, {Word{{0}}, Word{{1}}, Word{{0, 1}}});
  CHECK(rg.gamma == doctest::Approx(1.0 / (kGoldenRatio * kGoldenRatio)).epsilon(1e-2));
  CHECK(rg.pass);
  CHECK(rg.uniformity <= 10.0);

  // correlation at r through the dense chain: mu(Delta_s  cap  S^{-(s+r)} B) - mu(Delta_s) mu(B)
  const Eigen::MatrixXd q = dense_transition(g.full);
  const Eigen::VectorXd p = dense_stationary(g.full);
  const double mu_ds = dense_mu_delta_n(g.full, g.sub.sub, 3);
  for (std::size_t r : {1, 4, 9}) {
    Eigen::RowVectorXd row = p.transpose() * indicator(g.sub.sub);
    for (int i = 1; i < 3; ++i) row = row * q * indicator(g.sub.sub);
    for (std::size_t i = 0; i < r + 1; ++i) row = row * q;  // from position s-1 to s+r
    const double joint = row[0];
    const double expected = std::abs(joint - mu_ds * p[0]);
    CHECK(rg.words[0].correlations[r - 1] == doctest::Approx(expected).epsilon(1e-9).scale(1e-15));
  }
}

TEST_CASE("nested subsystems have larger pressure") {
  const auto a = random_potential(full(5), {0}, 70);
  const auto& full_sol = a.full;
  double previous = -1e300;
  for (std::size_t k = 1; k <= 4; ++k) {
    std::vector<Symbol> members;
    for (Symbol s = 0; s < k; ++s) members.push_back(s);
    const auto s = solve_subsystem(full_sol, sub_of(a.system, members));
    CHECK(s.pressure_delta > previous);
    CHECK(s.pressure_delta < 0.0);
    previous = s.pressure_delta;
  }
}

TEST_CASE("errors") {
  auto system = build_system(full(3));
  const auto raw = pressure(BlockPotential::constant(system, 0.0));
  try {
    solve_subsystem(raw, sub_of(system, {0, 1}));
    FAIL("unnormalized potential accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotNormalized);
  }
  auto periodic = build_system({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  try {
    solve_subsystem(uniform_solution(periodic), sub_of(periodic, {0, 1}));
    FAIL("periodic subsystem accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SubsystemNotMixing);
  }
  const auto f = make(kGolden, {0});
  CHECK_THROWS_AS(quasi_stationarity_check(f.sub, Word{{1, 1}}), Error);
}
