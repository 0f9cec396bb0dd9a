#include "hitlaw/pointprocess.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "hitlaw/error.hpp"
#include "hitlaw/kernels.hpp"
#include "hitlaw/rng.hpp"

namespace hitlaw {

void ClusterConfig::validate() const {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(c_n > 0.0 && c_n < 1.0)) throw Error(ErrorCode::InvalidArgument, "c_n must lie in (0,1)");
}

ClusterConfig ClusterConfig::for_subsystem(const SubsystemSolution& solution, std::size_t n,
                                           std::size_t window) {
  ClusterConfig config{n, std::exp(static_cast<double>(n) * solution.pressure_delta), window};
  config.validate();
  return config;
}

double PointProcessSample::observation_length() const noexcept {
  if (orbit_length <= config.n) return 0.0;
  return static_cast<double>(orbit_length - config.n) * config.c_n;
}

namespace {

template <class Get>
std::vector<double> gaps_of(std::size_t count, Get get) {
  std::vector<double> out;
  out.reserve(count);
  double previous = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = get(i);
    out.push_back(t - previous);
    previous = t;
  }
  return out;
}

}  // namespace

std::vector<double> PointProcessSample::cluster_gaps() const {
  return gaps_of(clusters.size(), [&](std::size_t i) { return clusters[i].start; });
}

std::vector<double> PointProcessSample::entrance_gaps() const {
  return gaps_of(entrances.size(),
                 [&](std::size_t i) { return static_cast<double>(entrances[i]) * config.c_n; });
}

// ---------------------------------------------------------------------------

HitExtractor::HitExtractor(ClusterConfig config)
    : config_(config), window_(config.effective_window()) {
  config_.validate();
  sample_.config = config_;
}

void HitExtractor::close_cluster() {
  if (!open_) return;
  open_ = false;
}

void HitExtractor::feed_bits(std::span<const std::uint64_t> bits, std::size_t count) {
  const std::uint64_t n = config_.n;
  for (std::size_t w = 0; w < kernels::mask_words(count); ++w) {
    const std::size_t base = w * 64;
    const std::size_t width = std::min<std::size_t>(64, count - base);
    std::uint64_t word = bits[w];
    if (word == 0) {
      run_ = 0;
      continue;
    }
    for (std::size_t b = 0; b < width; ++b) {
      if (!((word >> b) & 1u)) {
        run_ = 0;
        continue;
      }
      ++run_;
      if (run_ < n) continue;
      const std::uint64_t i = position_ + base + b;  // last symbol of the block
      const std::uint64_t k = i + 1 - n;
      if (k == 0) continue;  // the block at time 0 is never a hit
      sample_.hits.push_back(k);
      if (run_ == n) sample_.entrances.push_back(k);
      if (open_ && k - last_hit_ <= window_) {
        ++sample_.clusters.back().mark;
      } else {
        sample_.clusters.push_back({static_cast<double>(k) * config_.c_n, k, 1});
        open_ = true;
      }
      last_hit_ = k;
    }
  }
  position_ += count;
}

void HitExtractor::feed(std::span<const Symbol> symbols, const SubAlphabet& sub) {
  scratch_.resize(kernels::mask_words(symbols.size()));
  kernels::membership_mask(symbols, sub.membership_table(), scratch_);
  feed_bits(scratch_, symbols.size());
}

PointProcessSample HitExtractor::finish() {
  if (position_ <= config_.n) {
    throw Error(ErrorCode::OrbitTooShort, "orbit length must exceed n");
  }
  close_cluster();
  sample_.orbit_length = position_;
  PointProcessSample out = std::move(sample_);
  sample_ = PointProcessSample{};
  sample_.config = config_;
  position_ = run_ = last_hit_ = 0;
  return out;
}

PointProcessSample extract(std::span<const Symbol> orbit, const SubAlphabet& sub,
                           const ClusterConfig& config) {
  if (orbit.size() <= config.n) throw Error(ErrorCode::OrbitTooShort, "orbit length must exceed n");
  HitExtractor extractor(config);
  extractor.feed(orbit, sub);
  return extractor.finish();
}

PointProcessSample simulate_sample(const MarkovSampler& sampler, const SubAlphabet& sub,
                                   const ClusterConfig& config, std::uint64_t length,
                                   std::uint64_t seed) {
  if (length <= config.n) throw Error(ErrorCode::OrbitTooShort, "orbit length must exceed n");
  constexpr std::size_t kChunk = std::size_t{1} << 16;
  OrbitStream stream(sampler, seed);
  HitExtractor extractor(config);
  std::vector<Symbol> buffer(kChunk);
  for (std::uint64_t done = 0; done < length;) {
    const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, length - done));
    std::span<Symbol> chunk(buffer.data(), take);
    stream.generate(chunk);
    extractor.feed(chunk, sub);
    done += take;
  }
  return extractor.finish();
}

PointProcessSample synthetic_marked_poisson(const MarkedPoissonParams& params,
                                            const ClusterConfig& config, double horizon,
                                            std::uint64_t seed) {
  config.validate();
  Rng rng = make_rng(seed);
  std::exponential_distribution<double> arrival(params.lambda);
  // Marks are 1 + geometric failures with success probability 1 - ratio.
  std::geometric_distribution<std::size_t> extra(1.0 - params.ratio);
  PointProcessSample sample;
  sample.config = config;
  const std::uint64_t span_steps = static_cast<std::uint64_t>(std::floor(horizon / config.c_n));
  sample.orbit_length = span_steps + config.n;
  const std::size_t window = config.effective_window();
  double t = 0.0;
  std::uint64_t next_free = 1;
  while (true) {
    t += arrival(rng);
    std::uint64_t k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t / config.c_n)));
    if (k > span_steps) break;
    if (k < next_free) k = next_free;  // keep clusters disjoint
    const std::size_t mark = 1 + extra(rng);
    sample.clusters.push_back({static_cast<double>(k) * config.c_n, k, mark});
    sample.entrances.push_back(k);
    for (std::size_t j = 0; j < mark; ++j) sample.hits.push_back(k + j);
    next_free = k + mark + window + 1;
  }
  return sample;
}

// ---------------------------------------------------------------------------

LimitTestReport test_limit_law(std::span<const PointProcessSample> samples,
                               const MarkedPoissonParams& params) {
  LimitTestReport report;
  report.lambda = params.lambda;
  report.samples = samples.size();
  std::vector<double> gaps;
  std::vector<double> entrance_gaps;
  for (const auto& s : samples) {
    report.hits += s.hits.size();
    report.clusters += s.clusters.size();
    report.entrances += s.entrances.size();
    report.observation_length += s.observation_length();
    const auto g = s.cluster_gaps();
    gaps.insert(gaps.end(), g.begin(), g.end());
    const auto e = s.entrance_gaps();
    entrance_gaps.insert(entrance_gaps.end(), e.begin(), e.end());
    for (const auto& c : s.clusters) {
      if (report.mark_counts.size() < c.mark) report.mark_counts.resize(c.mark, 0);
      ++report.mark_counts[c.mark - 1];
    }
  }
  report.underpowered = report.clusters < 200;
  if (report.observation_length > 0.0) {
    const double len = report.observation_length;
    report.empirical_lambda = static_cast<double>(report.clusters) / len;
    report.lambda_se = std::sqrt(static_cast<double>(report.clusters)) / len;
    report.entrance_lambda = static_cast<double>(report.entrances) / len;
    report.entrance_lambda_se = std::sqrt(static_cast<double>(report.entrances)) / len;
  }
  if (params.lambda > 0.0) {
    report.lambda_relative_error = std::abs(report.empirical_lambda - params.lambda) / params.lambda;
    report.entrance_relative_error = std::abs(report.entrance_lambda - params.lambda) / params.lambda;
    std::sort(gaps.begin(), gaps.end());
    std::sort(entrance_gaps.begin(), entrance_gaps.end());
    report.gap_ks = stats::ks_exponential(gaps, params.lambda);
    report.entrance_ks = stats::ks_exponential(entrance_gaps, params.lambda);
  }
  Vector probs(std::max(report.mark_counts.size(), params.pi.size()));
  for (std::size_t j = 0; j < probs.size(); ++j) probs[j] = params.pi_at(j + 1);
  report.mark_chi = stats::chi_square_marks(report.mark_counts, probs);
  return report;
}

}  // namespace hitlaw
