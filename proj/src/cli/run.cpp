#include "hitlaw/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>

#include "hitlaw/error.hpp"
#include "hitlaw/kernels.hpp"
#include "hitlaw/matching.hpp"
#include "hitlaw/moments.hpp"
#include "hitlaw/pointprocess.hpp"
#include "hitlaw/rng.hpp"

namespace hitlaw::cli {

namespace {

constexpr std::size_t kReportedPi = 10;
constexpr std::uint64_t kPsiStream = 0x7073690000000000ULL;
constexpr std::uint64_t kMatchStream = 0x6d61746368000000ULL;

struct Context {
  Context(const ExperimentConfig& c, RunOptions o) : config(c), options(o) {}

  const ExperimentConfig& config;
  RunOptions options;
  std::optional<Model> model;
  std::map<std::size_t, std::vector<PointProcessSample>> samples;
  Json exact = Json::object();
  Json empirical = Json::object();
  Json timing = Json::object();
  CheckList checks;
  std::vector<CsvTable> tables;

  const Model& require_model() {
    if (!model) model = build_model(config);
    return *model;
  }
};

class Stopwatch {
 public:
  explicit Stopwatch(Json& timing, const char* key)
      : timing_(timing), key_(key), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    timing_[key_] = std::chrono::duration<double>(elapsed).count();
  }

 private:
  Json& timing_;
  const char* key_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> labels_of(const TransitionSystem& system, std::span<const Symbol> symbols) {
  std::vector<std::string> out;
  for (Symbol s : symbols) out.push_back(system.alphabet().label(s));
  return out;
}

std::vector<Word> cylinders(const SystemPtr& system, std::size_t max_length) {
  std::vector<Word> out;
  for (std::size_t len = 1; len <= max_length; ++len) {
    auto words = enumerate_words(system, len);
    while (auto w = words.next()) out.push_back(*w);
  }
  return out;
}

Json pi_json(const MarkedPoissonParams& p) {
  Json out = Json::array();
  for (std::size_t j = 1; j <= kReportedPi; ++j) out.push_back(p.pi_at(j));
  return out;
}

// ---------------------------------------------------------------------------

void section_validate(Context& ctx) {
  Stopwatch watch(ctx.timing, "validate");
  SystemPtr system;
  try {
    system = build_config_system(ctx.config);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParse) throw;
    throw Error(ErrorCode::ConfigParse, std::string("system.matrix: ") + e.what());
  }
  Json out;
  out["symbols"] = system->size();
  out["transitions"] = system->transitions();
  out["irreducible"] = system->irreducible();
  out["aperiodic"] = system->aperiodic();
  out["period"] = system->period();
  ctx.checks.add("validate.primitive", system->primitive(), system->primitive() ? 1.0 : 0.0, 1.0);

  SystemPtr target = system;
  if (ctx.config.potential.kind == "block" && ctx.config.potential.block_length > 2) {
    target = recode_higher_block(*system, ctx.config.potential.block_length).first;
    out["recoded_symbols"] = target->size();
  }
  try {
    const SubAlphabet sub = build_subalphabet(target, ctx.config.delta);
    const auto z = compute_zdelta(sub);
    out["delta"] = labels_of(*target, sub.members());
    out["delta_irreducible"] = sub.restricted_irreducible();
    out["delta_aperiodic"] = sub.restricted_aperiodic();
    out["delta_mixing"] = sub.mixing();
    out["zdelta"] = labels_of(*target, z);
    ctx.checks.add("validate.delta_mixing", sub.mixing(), sub.mixing() ? 1.0 : 0.0, 1.0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotProperSubset && e.code() != ErrorCode::UnknownSymbol) throw;
    throw Error(ErrorCode::ConfigParse, std::string("delta: ") + e.what());
  }
  ctx.exact["structure"] = out;
}

void section_thermo(Context& ctx) {
  Stopwatch watch(ctx.timing, "thermo");
  const Model& m = ctx.require_model();
  Json out;
  out["pressure"] = m.raw.pressure;
  out["perron_residual"] = m.raw.residual;
  out["normalized_pressure"] = m.full.pressure;
  out["normalization_defect"] = m.full.potential.normalization_defect();
  out["stationary"] = m.full.stationary;
  out["eigenfunction"] = m.raw.left;
  out["eigenvector"] = m.raw.right;
  ctx.exact["thermo"] = out;
  ctx.checks.add("thermo.perron_residual", m.raw.residual <= 1e-10, m.raw.residual, 1e-10);
  ctx.checks.add("thermo.normalized_pressure", std::abs(m.full.pressure) <= 1e-10, std::abs(m.full.pressure), 1e-10);
}

void section_subsystem(Context& ctx) {
  Stopwatch watch(ctx.timing, "subsystem");
  const Model& m = ctx.require_model();
  const SubsystemSolution& s = m.solution;
  const auto& system = *m.system;
  Json out;
  out["pressure_delta"] = s.pressure_delta;
  out["beta"] = s.beta;
  out["c"] = s.total_mass;
  out["lambda"] = m.params.lambda;
  out["theta"] = m.params.theta;
  out["pi"] = pi_json(m.params);
  out["zdelta"] = labels_of(system, s.zdelta);
  out["h"] = s.h;
  out["w_delta"] = s.w_delta;
  out["eigenmeasure"] = s.eigenmeasure;
  out["mu_delta"] = s.restricted.stationary;
  out["eigen_residual"] = s.eigen_residual;
  ctx.checks.add("subsystem.eigen_residual", s.eigen_residual <= 1e-12, s.eigen_residual, 1e-12);

  const MarkedPoissonParams ident = identify_params(s.total_mass, m.params.theta, m.params.pi.size());
  double ident_residual = std::abs(ident.lambda - m.params.lambda);
  for (std::size_t j = 0; j < ident.pi.size(); ++j) {
    ident_residual = std::max(ident_residual, std::abs(ident.pi[j] - m.params.pi[j]));
  }
  out["identify_params_residual"] = ident_residual;
  ctx.checks.add("subsystem.identify_params", ident_residual <= 1e-12, ident_residual, 1e-12);

  // identities
  const auto words = cylinders(m.system, 2);
  double qs = 0.0, cond = 0.0, db = 0.0;
  for (const Word& w : words) {
    qs = std::max(qs, quasi_stationarity_check(s, w).residual);
    cond = std::max(cond, conditional_limit_check(s, w, 40).final_error);
    const auto eq = subsystem_equilibrium_limit_check(s, w, 30);
    db = std::max({db, eq.initial.final_error, eq.midpoint.final_error});
  }
  out["quasi_stationarity_residual"] = qs;
  out["conditional_limit_error"] = cond;
  out["subsystem_limit_error"] = db;
  ctx.checks.add("subsystem.quasi_stationarity", qs <= 1e-10, qs, 1e-10);
  ctx.checks.add("subsystem.conditional_limit", cond <= 1e-6, cond, 1e-6);
  ctx.checks.add("subsystem.subsystem_limit", db <= 1e-6, db, 1e-6);

  const auto dels = dels_limit_check(s, 0, 40);
  out["scaled_mass_convergence"] = convergence_json(dels);
  ctx.checks.add("subsystem.scaled_mass_limit", dels.pass, dels.final_error, dels.tolerance);
  double enum_gap = 0.0;
  std::size_t enum_max = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    if (count_words(system, n, &s.sub) > 1'000'000) break;
    const auto md = mu_delta_n(s, n);
    enum_gap = std::max(enum_gap, std::abs(md.value - *md.by_enumeration));
    enum_max = n;
  }
  out["enumeration_max_n"] = enum_max;
  out["enumeration_gap"] = enum_gap;
  ctx.checks.add("subsystem.enumeration_agreement", enum_gap <= 1e-10, enum_gap, 1e-10);

  Rng rng = make_rng(derive_seed(ctx.config.seed, kPsiStream));
  double cms = 0.0, literal = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector psi(system.size());
    for (double& v : psi) v = uniform01(rng);
    const auto report = cms_convergence_check(s, psi, 60);
    cms = std::max(cms, report.convergence.final_error);
    literal = std::max(literal, report.literal_error);
  }
  out["eigenmeasure_convergence_error"] = cms;
  out["mu_delta_normalization_error"] = literal;
  ctx.checks.add("subsystem.operator_convergence", cms <= 1e-8, cms, 1e-8);

  std::vector<Word> ones;
  for (Symbol a = 0; a < system.size(); ++a) ones.push_back(Word{{a}});
  const auto decay = relativised_decay_check(s, 3, 30, ones);
  out["decay"] = {{"gamma", decay.gamma}, {"uniformity", decay.uniformity}, {"pass", decay.pass}};
  ctx.checks.add("subsystem.decay", decay.pass, decay.gamma, 1.0);
  ctx.exact["subsystem"] = out;
}

void section_clusters(Context& ctx) {
  Stopwatch watch(ctx.timing, "clusters");
  const Model& m = ctx.require_model();
  const auto& spec = ctx.config.cluster;
  std::vector<ClusterConstant> windowed, full;
  Json rows = Json::array();
  double worst = 0.0;
  std::vector<std::pair<std::size_t, double>> estimates;
  for (std::size_t k = 1; k <= spec.m_max; ++k) {
    windowed.push_back(exact_cluster_constants(m.solution, k, spec.n, spec.window));
    full.push_back(exact_cluster_constants(m.solution, k, spec.n, spec.n));
    const auto& c = windowed.back();
    worst = std::max(worst, c.tilde_relative_error);
    estimates.emplace_back(k, c.value);
    rows.push_back({{"m", k},
                    {"window", c.window},
                    {"tilde", c.tilde},
                    {"tilde_limit", c.tilde_limit},
                    {"relative_error", c.tilde_relative_error},
                    {"window_n_tilde", full.back().tilde},
                    {"window_n_relative_error", full.back().tilde_relative_error}});
  }
  Json out{{"n", spec.n}, {"table", rows}};
  ctx.checks.add("clusters.limit", worst <= 1e-3, worst, 1e-3);
  if (estimates.size() >= 3) {
    const auto fit = fit_cluster_constants(estimates);
    out["fit"] = {{"c", fit.c}, {"theta", fit.theta}, {"residual", fit.residual}};
  }
  ctx.exact["clusters"] = out;
  ctx.tables.push_back(cluster_table_csv("clusters.csv", windowed, full));
}

const std::vector<PointProcessSample>& samples_for(Context& ctx, std::size_t index) {
  const std::size_t n = ctx.config.n_values[index];
  auto it = ctx.samples.find(n);
  if (it != ctx.samples.end()) return it->second;
  const Model& m = ctx.require_model();
  const MarkovSampler sampler(m.full);
  const ClusterConfig cc = ClusterConfig::for_subsystem(m.solution, n, ctx.config.window);
  const std::uint64_t base = derive_seed(ctx.config.seed, index);
  auto samples = parallel_indexed<PointProcessSample>(ctx.config.replicas, ctx.options.threads, [&](std::size_t r) {
    return simulate_sample(sampler, m.sub, cc, ctx.config.orbit_length, derive_seed(base, r));
  });
  return ctx.samples.emplace(n, std::move(samples)).first->second;
}

void limit_checks(CheckList& checks, const std::string& prefix, const LimitTestReport& r) {
  if (r.underpowered) {
    checks.skip(prefix, "fewer than 200 clusters");
    return;
  }
  const double lambda_tol = std::max(0.03, 3.0 * r.lambda_se / r.lambda);
  const double entrance_tol = std::max(0.03, 3.0 * r.entrance_lambda_se / r.lambda);
  checks.add(prefix + ".lambda", r.lambda_relative_error <= lambda_tol, r.lambda_relative_error, lambda_tol);
  checks.add(prefix + ".gap_ks", r.gap_ks.p_value > 0.01, r.gap_ks.p_value, 0.01);
  checks.add(prefix + ".mark_chi_square", r.mark_chi.p_value > 0.01, r.mark_chi.p_value, 0.01);
  checks.add(prefix + ".entrance_lambda", r.entrance_relative_error <= entrance_tol, r.entrance_relative_error,
             entrance_tol);
  checks.add(prefix + ".entrance_ks", r.entrance_ks.p_value > 0.01, r.entrance_ks.p_value, 0.01);
}

void section_simulate(Context& ctx) {
  Stopwatch watch(ctx.timing, "simulate");
  const Model& m = ctx.require_model();
  Json runs = Json::array();
  for (std::size_t i = 0; i < ctx.config.n_values.size(); ++i) {
    const std::size_t n = ctx.config.n_values[i];
    const auto& samples = samples_for(ctx, i);
    const LimitTestReport report = test_limit_law(samples, m.params);
    Json entry = limit_test_json(report);
    entry["n"] = n;
    entry["c_n"] = samples.front().config.c_n;
    entry["window"] = samples.front().config.effective_window();
    runs.push_back(entry);
    limit_checks(ctx.checks, "simulate.n" + std::to_string(n), report);
    ctx.tables.push_back(gaps_csv("gaps_n" + std::to_string(n) + ".csv", samples));
    ctx.tables.push_back(marks_csv("marks_n" + std::to_string(n) + ".csv", report, m.params));
  }
  ctx.empirical["simulate"] = {{"orbit_length", ctx.config.orbit_length},
                               {"replicas", ctx.config.replicas},
                               {"runs", runs}};
}

void section_moments(Context& ctx) {
  Stopwatch watch(ctx.timing, "moments");
  const Model& m = ctx.require_model();
  const TestFunction g = build_test_function(ctx.config.test_function);
  const ClusterSequence constants{m.solution.total_mass, m.params.theta};
  const Vector analytic = analytic_moments(constants, g, 4);
  const Vector marked = analytic_moments_marked(m.params, g, 4);
  double agreement = 0.0;
  for (std::size_t k = 0; k <= 4; ++k) agreement = std::max(agreement, std::abs(analytic[k] - marked[k]));
  ctx.checks.add("moments.analytic_agreement", agreement <= 1e-10, agreement, 1e-10);
  Json runs = Json::array();
  for (std::size_t i = 0; i < ctx.config.n_values.size(); ++i) {
    const std::size_t n = ctx.config.n_values[i];
    const auto& samples = samples_for(ctx, i);
    Json entry{{"n", n}};
    for (unsigned k = 1; k <= 2; ++k) {
      const auto est = empirical_moment(samples, g, k);
      const double err = std::abs(est.mean - analytic[k]);
      entry["nu" + std::to_string(k)] = {
          {"empirical", est.mean}, {"se", est.se}, {"windows", est.count}, {"analytic", analytic[k]}, {"error", err}};
      if (est.count < 30) {
        ctx.checks.skip("moments.n" + std::to_string(n) + ".nu" + std::to_string(k), "fewer than 30 windows");
      } else {
        ctx.checks.add("moments.n" + std::to_string(n) + ".nu" + std::to_string(k), err <= 3.0 * est.se, err,
                       3.0 * est.se);
      }
    }
    runs.push_back(entry);
  }
  ctx.empirical["moments"] = {{"test_function", ctx.config.test_function.kind},
                              {"integral_g", g.integral_power(1)},
                              {"integral_g2", g.integral_power(2)},
                              {"analytic", analytic},
                              {"analytic_marked", marked},
                              {"analytic_agreement", agreement},
                              {"runs", runs}};
}

struct MatchRoute {
  LimitTestReport report;
  double hit_rate = 0.0;
  double hit_rate_se = 0.0;
};

MatchRoute summarize_route(std::span<const PointProcessSample> samples, const MarkedPoissonParams& params) {
  MatchRoute route{test_limit_law(samples, params), 0.0, 0.0};
  double positions = 0.0, hits = 0.0, square_marks = 0.0;
  for (const auto& s : samples) {
    positions += static_cast<double>(s.orbit_length - s.config.n);
    hits += static_cast<double>(s.hits.size());
    for (const auto& c : s.clusters) square_marks += static_cast<double>(c.mark) * static_cast<double>(c.mark);
  }
  route.hit_rate = hits / positions;
  route.hit_rate_se = std::sqrt(square_marks) / positions;
  return route;
}

Json route_json(const MatchRoute& r) {
  Json out = limit_test_json(r.report);
  out["hit_rate"] = r.hit_rate;
  out["hit_rate_se"] = r.hit_rate_se;
  return out;
}

void section_match(Context& ctx) {
  Stopwatch watch(ctx.timing, "match");
  if (!ctx.config.matching) {
    ctx.checks.skip("match", "no matching section in config");
    return;
  }
  const MatchingSpec& spec = *ctx.config.matching;
  std::shared_ptr<const ProductSystem> product;
  std::optional<DiagonalSubsystem> diagonal;
  try {
    const SystemPtr base = build_config_system(ctx.config);
    std::vector<BlockPotential> factors;
    for (std::size_t i = 0; i < spec.factors; ++i) {
      const PotentialSpec& p = spec.potentials.size() == 1 ? spec.potentials.front() : spec.potentials[i];
      if (p.kind == "block" && p.block_length > 2) {
        throw Error(ErrorCode::ConfigParse, "matching.potentials: block potentials must have block_length 2");
      }
      factors.push_back(build_potential(p, base));
    }
    product = std::make_shared<const ProductSystem>(build_product(factors));
    diagonal = diagonal_matching(product);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParse) throw;
    throw Error(ErrorCode::ConfigParse, std::string("matching: ") + e.what());
  }
  const auto& d = *diagonal;
  bool clamped = false;
  const std::size_t eps_n = epsilon_to_n(spec.epsilon, d.p_star, &clamped);
  Json exact{{"factors", spec.factors},
             {"product_symbols", product->product->size()},
             {"product_transitions", product->product->transitions()},
             {"pressure_residual", product->pressure_residual},
             {"stationary_residual", product->stationary_residual},
             {"p_star", d.p_star},
             {"exp_p_star", std::exp(d.p_star)},
             {"c", d.solution.total_mass},
             {"lambda", d.params.lambda},
             {"theta", d.params.theta},
             {"pi", pi_json(d.params)},
             {"epsilon", spec.epsilon},
             {"epsilon_n", eps_n},
             {"epsilon_n_clamped", clamped}};
  ctx.checks.add("match.product_pressure", product->pressure_residual <= 1e-10, product->pressure_residual, 1e-10);
  ctx.checks.add("match.product_stationary", product->stationary_residual <= 1e-12, product->stationary_residual,
                 1e-12);
  ctx.exact["match"] = exact;

  const ClusterConfig cc{spec.n, std::exp(static_cast<double>(spec.n) * d.p_star), 0};
  cc.validate();
  const std::uint64_t base = derive_seed(ctx.config.seed, kMatchStream);
  auto direct = parallel_indexed<PointProcessSample>(spec.replicas, ctx.options.threads, [&](std::size_t r) {
    return simulate_matching_direct(*product, cc, spec.orbit_length, derive_seed(derive_seed(base, 0), r));
  });
  auto through_product = parallel_indexed<PointProcessSample>(spec.replicas, ctx.options.threads, [&](std::size_t r) {
    return simulate_matching_product(d, cc, spec.orbit_length, derive_seed(derive_seed(base, 1), r));
  });
  const MatchRoute a = summarize_route(direct, d.params);
  const MatchRoute b = summarize_route(through_product, d.params);
  const double z = (a.report.empirical_lambda - b.report.empirical_lambda) /
                   std::sqrt(a.report.lambda_se * a.report.lambda_se + b.report.lambda_se * b.report.lambda_se);
  const double exact_rate = mu_delta_n(d.solution, spec.n).value;
  const double z_rate = (a.hit_rate - exact_rate) / a.hit_rate_se;
  ctx.checks.add("match.route_agreement", std::abs(z) <= 3.0, std::abs(z), 3.0);
  ctx.checks.add("match.matching_rate", std::abs(z_rate) <= 3.0, std::abs(z_rate), 3.0);
  ctx.empirical["match"] = {{"n", spec.n},
                            {"c_n", cc.c_n},
                            {"orbit_length", spec.orbit_length},
                            {"replicas", spec.replicas},
                            {"direct", route_json(a)},
                            {"product", route_json(b)},
                            {"route_z", z},
                            {"exact_matching_rate", exact_rate},
                            {"matching_rate_z", z_rate}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"validate", "thermo",  "subsystem", "clusters",
                                              "simulate", "moments", "match",     "full"};
  return names;
}

RunResult run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options) {
  Context ctx(config, options);
  const auto t0 = std::chrono::steady_clock::now();
  if (subcommand == "validate") {
    section_validate(ctx);
  } else if (subcommand == "thermo") {
    section_thermo(ctx);
  } else if (subcommand == "subsystem") {
    section_subsystem(ctx);
  } else if (subcommand == "clusters") {
    section_clusters(ctx);
  } else if (subcommand == "simulate") {
    section_simulate(ctx);
  } else if (subcommand == "moments") {
    section_moments(ctx);
  } else if (subcommand == "match") {
    section_match(ctx);
  } else if (subcommand == "full") {
    section_validate(ctx);
    section_thermo(ctx);
    section_subsystem(ctx);
    section_clusters(ctx);
    section_simulate(ctx);
    section_moments(ctx);
    section_match(ctx);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + subcommand + "'");
  }
  ctx.timing["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunResult result;
  result.pass = ctx.checks.all_pass();
  result.report["schema"] = kSchemaVersion;
  result.report["subcommand"] = subcommand;
  result.report["metadata"] = {{"name", config.name},
                               {"config_hash", config_hash(config)},
                               {"seed", config.seed},
                               {"version", kVersion},
                               {"kernels", kernels::name(kernels::active())}};
  result.report["exact"] = ctx.exact;
  result.report["empirical"] = ctx.empirical;
  result.report["checks"] = ctx.checks.to_json();
  result.report["pass"] = result.pass;
  result.report["timing"] = ctx.timing;
  result.tables = std::move(ctx.tables);
  return result;
}

}  // namespace hitlaw::cli
