#include "hitlaw/matching.hpp"

#include <cmath>

#include "hitlaw/error.hpp"
#include "hitlaw/kernels.hpp"
#include "hitlaw/rng.hpp"

namespace hitlaw {

Symbol ProductSystem::encode(std::span<const Symbol> coordinates) const {
  Symbol state = 0;
  for (Symbol x : coordinates) state = state * static_cast<Symbol>(alphabet) + x;
  return state;
}

std::vector<Symbol> ProductSystem::decode(Symbol state) const {
  std::vector<Symbol> out(N());
  for (std::size_t i = N(); i-- > 0;) {
    out[i] = state % static_cast<Symbol>(alphabet);
    state /= static_cast<Symbol>(alphabet);
  }
  return out;
}

Symbol ProductSystem::diagonal_state(Symbol a) const {
  Symbol repunit = 0;
  for (std::size_t i = 0; i < N(); ++i) repunit = repunit * static_cast<Symbol>(alphabet) + 1;
  return a * repunit;
}

namespace {

ProductSystem assemble(std::vector<Factor> factors, std::size_t ell) {
  const std::size_t n_factors = factors.size();
  std::size_t states = 1;
  std::size_t edges = 1;
  for (const auto& f : factors) {
    states *= ell;
    edges *= f.potential.system()->transitions();
    if (states > 10'000 || edges > 50'000'000) {
      throw Error(ErrorCode::ProductTooLarge, "product system exceeds 10^4 states or 5e7 transitions");
    }
  }
  std::vector<std::string> labels(states);
  std::vector<std::vector<Symbol>> successors(states);
  std::vector<Symbol> coords(n_factors);
  for (std::size_t s = 0; s < states; ++s) {
    std::size_t rest = s;
    for (std::size_t i = n_factors; i-- > 0;) {
      coords[i] = static_cast<Symbol>(rest % ell);
      rest /= ell;
    }
    std::string label;
    for (std::size_t i = 0; i < n_factors; ++i) {
      if (i) label += '|';
      label += factors[i].potential.system()->alphabet().label(coords[i]);
    }
    labels[s] = std::move(label);
    // successors in increasing state order: odometer over factor successor lists
    std::vector<std::span<const std::uint32_t>> lists(n_factors);
    bool empty = false;
    for (std::size_t i = 0; i < n_factors; ++i) {
      lists[i] = factors[i].potential.system()->successors(coords[i]);
      empty = empty || lists[i].empty();
    }
    if (empty) continue;
    std::vector<std::size_t> pos(n_factors, 0);
    while (true) {
      Symbol t = 0;
      for (std::size_t i = 0; i < n_factors; ++i) t = t * static_cast<Symbol>(ell) + lists[i][pos[i]];
      successors[s].push_back(t);
      std::size_t i = n_factors;
      while (i-- > 0) {
        if (++pos[i] < lists[i].size()) break;
        pos[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
  }
  auto system = std::make_shared<const TransitionSystem>(Alphabet(std::move(labels)), std::move(successors));

  Vector weights(system->transitions());
  std::vector<Symbol> to(n_factors);
  for (Symbol s = 0; s < states; ++s) {
    std::size_t rest = s;
    for (std::size_t i = n_factors; i-- > 0;) {
      coords[i] = static_cast<Symbol>(rest % ell);
      rest /= ell;
    }
    for (Symbol t : system->successors(s)) {
      std::size_t r = t;
      double w = 0.0;
      for (std::size_t i = n_factors; i-- > 0;) {
        w += factors[i].potential.weight(coords[i], static_cast<Symbol>(r % ell));
        r /= ell;
      }
      weights[*system->edge_index(s, t)] = w;
    }
  }
  bool all_normalized = true;
  for (const auto& f : factors) all_normalized = all_normalized && f.potential.normalized();
  BlockPotential potential(system, std::move(weights), all_normalized);
  ThermoSolution solution = pressure(potential);
  ProductSystem out{std::move(factors), ell, system, potential, std::move(solution), 0.0, 0.0};
  double total = 0.0;
  for (const auto& f : out.factors) total += f.solution.pressure;
  out.pressure_residual = std::abs(out.solution.pressure - total);
  for (Symbol s = 0; s < states; ++s) {
    const auto c = out.decode(s);
    double p = 1.0;
    for (std::size_t i = 0; i < n_factors; ++i) p *= out.factors[i].solution.stationary[c[i]];
    out.stationary_residual = std::max(out.stationary_residual, std::abs(p - out.solution.stationary[s]));
  }
  return out;
}

}  // namespace

ProductSystem build_product(const std::vector<BlockPotential>& factors) {
  if (factors.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two factors");
  const auto& alphabet = factors.front().system()->alphabet();
  std::vector<Factor> parts;
  for (const auto& phi : factors) {
    if (!(phi.system()->alphabet() == alphabet)) {
      throw Error(ErrorCode::AlphabetMismatch, "factors must share one alphabet");
    }
    if (!phi.system()->primitive()) {
      throw Error(ErrorCode::NotPrimitive, "every factor must be irreducible and aperiodic");
    }
  }
  std::size_t states = 1;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    states *= alphabet.size();
    if (states > 10'000) throw Error(ErrorCode::ProductTooLarge, "l^N exceeds 10^4");
  }
  for (const auto& phi : factors) parts.push_back({phi, pressure(phi)});
  return assemble(std::move(parts), alphabet.size());
}

DiagonalSubsystem diagonal_matching(std::shared_ptr<const ProductSystem> product) {
  const BlockPotential normalized = normalize(product->potential);
  ThermoSolution full = pressure(normalized);
  std::vector<Symbol> members;
  for (Symbol a = 0; a < product->alphabet; ++a) members.push_back(product->diagonal_state(a));
  SubAlphabet diagonal = build_subalphabet(product->product, members);
  SubsystemSolution solution = solve_subsystem(full, diagonal);
  DiagonalSubsystem out{product, diagonal, solution, solution.pressure_delta, {}};
  out.params = marked_poisson_params(out.solution);
  return out;
}

std::size_t epsilon_to_n(double epsilon, double p_star, bool* clamped) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  if (!(p_star < 0.0)) throw Error(ErrorCode::InvalidArgument, "P_star must be negative");
  const double depth = std::ceil(std::log(epsilon) / p_star - 1e-9);
  const bool low = depth < 1.0;
  if (clamped) *clamped = low;
  return low ? 1 : static_cast<std::size_t>(depth);
}

BlockPotential bernoulli_potential(const std::vector<double>& probabilities) {
  const std::size_t ell = probabilities.size();
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "probabilities must sum to 1");
  auto system = build_system(std::vector<std::vector<int>>(ell, std::vector<int>(ell, 1)));
  std::vector<std::vector<double>> table(ell, std::vector<double>(ell));
  for (std::size_t a = 0; a < ell; ++a) {
    for (std::size_t b = 0; b < ell; ++b) table[a][b] = std::log(probabilities[a]);
  }
  BlockPotential raw = BlockPotential::from_dense(system, table);
  return BlockPotential(system, Vector(raw.edge_weights().begin(), raw.edge_weights().end()),
                        raw.normalization_defect() <= 1e-10);
}

PointProcessSample simulate_matching_direct(const ProductSystem& product, const ClusterConfig& config,
                                            std::uint64_t length, std::uint64_t seed) {
  if (length <= config.n) throw Error(ErrorCode::OrbitTooShort, "orbit length must exceed n");
  constexpr std::size_t kChunk = std::size_t{1} << 16;
  std::vector<MarkovSampler> samplers;
  samplers.reserve(product.N());
  for (const auto& f : product.factors) samplers.emplace_back(f.solution);
  std::vector<OrbitStream> streams;
  streams.reserve(product.N());
  for (std::size_t i = 0; i < product.N(); ++i) streams.emplace_back(samplers[i], derive_seed(seed, i));
  std::vector<std::vector<Symbol>> buffers(product.N(), std::vector<Symbol>(kChunk));
  std::vector<std::span<const Symbol>> views(product.N());
  std::vector<std::uint64_t> bits(kernels::mask_words(kChunk));
  HitExtractor extractor(config);
  for (std::uint64_t done = 0; done < length;) {
    const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, length - done));
    for (std::size_t i = 0; i < product.N(); ++i) {
      std::span<Symbol> chunk(buffers[i].data(), take);
      streams[i].generate(chunk);
      views[i] = chunk;
    }
    kernels::coincidence_mask(views, bits);
    extractor.feed_bits(bits, take);
    done += take;
  }
  return extractor.finish();
}

PointProcessSample simulate_matching_product(const DiagonalSubsystem& diagonal,
                                             const ClusterConfig& config, std::uint64_t length,
                                             std::uint64_t seed) {
  const MarkovSampler sampler(diagonal.solution.full);
  return simulate_sample(sampler, diagonal.diagonal, config, length, seed);
}

}  // namespace hitlaw
