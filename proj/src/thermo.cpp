#include "hitlaw/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hitlaw/error.hpp"

namespace hitlaw {

BlockPotential::BlockPotential(SystemPtr system, Vector edge_weights, bool normalized)
    : system_(std::move(system)), weights_(std::move(edge_weights)), normalized_(normalized) {
  if (weights_.size() != system_->transitions()) {
    throw Error(ErrorCode::InvalidArgument, "one weight per allowed transition is required");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "potential weights must be finite");
  }
  if (normalized_ && normalization_defect() > 1e-10) {
    throw Error(ErrorCode::NotNormalized, "potential marked normalized but L1 != 1");
  }
}

BlockPotential BlockPotential::constant(SystemPtr system, double value) {
  const std::size_t edges = system->transitions();
  return BlockPotential(std::move(system), Vector(edges, value));
}

BlockPotential BlockPotential::from_dense(SystemPtr system,
                                          const std::vector<std::vector<double>>& weights) {
  const std::size_t n = system->size();
  if (weights.size() != n) throw Error(ErrorCode::NotSquare, "weight matrix has wrong row count");
  Vector edge(system->transitions());
  for (Symbol a = 0; a < n; ++a) {
    if (weights[a].size() != n) {
      throw Error(ErrorCode::NotSquare, "weight row " + std::to_string(a) + " has wrong length");
    }
    for (Symbol b : system->successors(a)) edge[*system->edge_index(a, b)] = weights[a][b];
  }
  return BlockPotential(std::move(system), std::move(edge));
}

BlockPotential BlockPotential::from_blocks(SystemPtr recoded, const RecodingMap& map,
                                           const std::function<double(std::span<const Symbol>)>& f) {
  Vector edge(recoded->transitions());
  std::vector<Symbol> block;
  for (Symbol u = 0; u < recoded->size(); ++u) {
    for (Symbol v : recoded->successors(u)) {
      block = map.projection[u];
      block.push_back(map.projection[v].back());
      edge[*recoded->edge_index(u, v)] = f(block);
    }
  }
  return BlockPotential(std::move(recoded), std::move(edge));
}

double BlockPotential::weight(Symbol a, Symbol b) const noexcept {
  if (auto e = system_->edge_index(a, b)) return weights_[*e];
  return -std::numeric_limits<double>::infinity();
}

double BlockPotential::normalization_defect() const {
  Vector column(system_->size(), 0.0);
  const auto& adj = system_->adjacency();
  for (Symbol a = 0; a < system_->size(); ++a) {
    for (std::size_t e = adj.offsets()[a]; e < adj.offsets()[a + 1]; ++e) {
      column[adj.indices()[e]] += std::exp(weights_[e]);
    }
  }
  double defect = 0.0;
  for (double c : column) defect = std::max(defect, std::abs(c - 1.0));
  return defect;
}

CsrMatrix BlockPotential::exp_matrix(double shift) const {
  const auto& adj = system_->adjacency();
  std::vector<double> values(weights_.size());
  for (std::size_t e = 0; e < values.size(); ++e) values[e] = std::exp(weights_[e] - shift);
  return CsrMatrix(adj.rows(), adj.cols(), {adj.offsets().begin(), adj.offsets().end()},
                   {adj.indices().begin(), adj.indices().end()}, std::move(values));
}

CsrMatrix BlockPotential::operator_matrix() const { return exp_matrix().transposed(); }

double ThermoSolution::integrate(std::span<const double> psi) const {
  return kernels::dot(stationary, psi);
}

ThermoSolution pressure(const BlockPotential& potential, const PerronOptions& options) {
  const auto& system = *potential.system();
  const auto weights = potential.edge_weights();
  const double shift = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
  const CsrMatrix k = potential.exp_matrix(shift);
  PerronResult perron_data = perron(k, system.primitive(), options);

  ThermoSolution sol{potential, std::log(perron_data.eigenvalue) + shift, std::move(perron_data.right),
                     std::move(perron_data.left), {}, {}, perron_data.right_residual};
  const std::size_t n = system.size();
  sol.stationary.resize(n);
  double norm = 0.0;
  for (std::size_t a = 0; a < n; ++a) norm += sol.left[a] * sol.right[a];
  for (std::size_t a = 0; a < n; ++a) sol.stationary[a] = sol.left[a] * sol.right[a] / norm;

  std::vector<double> q(k.nonzeros());
  for (Symbol a = 0; a < n; ++a) {
    const auto cols = k.row_indices(a);
    const auto vals = k.row_values(a);
    double row = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      q[k.offsets()[a] + i] = vals[i] * sol.right[cols[i]];
      row += q[k.offsets()[a] + i];
    }
    // row == lambda * w_a up to the eigen-residual; dividing by it makes Q exactly stochastic.
    for (std::size_t i = 0; i < cols.size(); ++i) q[k.offsets()[a] + i] /= row;
  }
  sol.transition = CsrMatrix(n, n, {k.offsets().begin(), k.offsets().end()},
                             {k.indices().begin(), k.indices().end()}, std::move(q));
  return sol;
}

BlockPotential normalize(const BlockPotential& potential, const PerronOptions& options) {
  const ThermoSolution sol = pressure(potential, options);
  const auto& system = *potential.system();
  Vector edge(potential.edge_weights().begin(), potential.edge_weights().end());
  for (Symbol a = 0; a < system.size(); ++a) {
    for (Symbol b : system.successors(a)) {
      auto& w = edge[*system.edge_index(a, b)];
      w = w - sol.pressure + std::log(sol.left[a]) - std::log(sol.left[b]);
    }
  }
  return BlockPotential(potential.system(), std::move(edge), true);
}

CylinderMeasure cylinder_measure(const ThermoSolution& solution, const Word& word) {
  const auto& system = solution.system();
  require_allowed(system, word);
  CylinderMeasure out{word, 1.0, 0.0};
  if (word.empty()) return out;
  double log_mass = std::log(solution.stationary[word.symbols[0]]);
  for (std::size_t i = 1; i < word.size(); ++i) {
    log_mass += std::log(solution.transition.values()[*system.edge_index(word.symbols[i - 1], word.symbols[i])]);
  }
  out.log_mass = log_mass;
  out.mass = std::exp(log_mass);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::uint64_t to_threshold(double cumulative) {
  if (cumulative >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  const double scaled = std::ldexp(cumulative, 64);
  if (scaled >= 18446744073709551615.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

}  // namespace

MarkovSampler::MarkovSampler(const ThermoSolution& solution) {
  const std::size_t n = solution.system().size();
  double cum = 0.0;
  initial_.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    cum += solution.stationary[a];
    initial_[a] = to_threshold(cum);
  }
  initial_.back() = std::numeric_limits<std::uint64_t>::max();

  const auto& q = solution.transition;
  offsets_.assign(q.offsets().begin(), q.offsets().end());
  targets_.assign(q.indices().begin(), q.indices().end());
  thresholds_.resize(q.nonzeros());
  for (std::size_t a = 0; a < n; ++a) {
    cum = 0.0;
    for (std::size_t e = offsets_[a]; e < offsets_[a + 1]; ++e) {
      cum += q.values()[e];
      thresholds_[e] = to_threshold(cum);
    }
    thresholds_[offsets_[a + 1] - 1] = std::numeric_limits<std::uint64_t>::max();
  }
}

Symbol MarkovSampler::initial(Rng& rng) const noexcept {
  const std::uint64_t u = rng();
  for (std::size_t a = 0; a + 1 < initial_.size(); ++a) {
    if (u < initial_[a]) return static_cast<Symbol>(a);
  }
  return static_cast<Symbol>(initial_.size() - 1);
}

Symbol MarkovSampler::step(Symbol from, Rng& rng) const noexcept {
  const std::uint64_t u = rng();
  const std::size_t last = offsets_[from + 1] - 1;
  std::size_t e = offsets_[from];
  while (e < last && u >= thresholds_[e]) ++e;
  return targets_[e];
}

OrbitStream::OrbitStream(const MarkovSampler& sampler, std::uint64_t seed)
    : sampler_(&sampler), rng_(make_rng(seed)) {}

void OrbitStream::generate(std::span<Symbol> out) {
  std::size_t i = 0;
  if (!started_ && !out.empty()) {
    state_ = sampler_->initial(rng_);
    out[0] = state_;
    started_ = true;
    i = 1;
  }
  for (; i < out.size(); ++i) {
    state_ = sampler_->step(state_, rng_);
    out[i] = state_;
  }
}

std::vector<Symbol> sample_orbit(const ThermoSolution& solution, std::size_t length, std::uint64_t seed) {
  if (length == 0) throw Error(ErrorCode::InvalidArgument, "orbit length must be >= 1");
  const MarkovSampler sampler(solution);
  OrbitStream stream(sampler, seed);
  std::vector<Symbol> orbit(length);
  stream.generate(orbit);
  return orbit;
}

}  // namespace hitlaw
