#pragma once

// Hitting and entrance processes of Delta_n along sampled orbits, grouped into
// marked clusters, and goodness-of-fit tests against the marked-Poisson law.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hitlaw/sft.hpp"
#include "hitlaw/stats.hpp"
#include "hitlaw/subsystem.hpp"
#include "hitlaw/thermo.hpp"

namespace hitlaw {

struct ClusterConfig {
  std::size_t n = 1;
  double c_n = 0.5;         // time rescaling, e^{n P_Delta}
  std::size_t window = 0;   // maximal gap inside a cluster; 0 means n

  std::size_t effective_window() const noexcept { return window == 0 ? n : window; }
  void validate() const;  // throws InvalidArgument

  static ClusterConfig for_subsystem(const SubsystemSolution& solution, std::size_t n,
                                     std::size_t window = 0);
};

struct Cluster {
  double start = 0.0;          // start_index * c_n
  std::uint64_t start_index = 0;
  std::size_t mark = 0;        // number of hits in the cluster
};

struct PointProcessSample {
  std::vector<std::uint64_t> hits;
  std::vector<std::uint64_t> entrances;
  std::vector<Cluster> clusters;
  std::uint64_t orbit_length = 0;
  ClusterConfig config;

  /// (T - n) c_n
  double observation_length() const noexcept;
  /// Rescaled waiting times between cluster starts, the first measured from 0.
  std::vector<double> cluster_gaps() const;
  std::vector<double> entrance_gaps() const;
};

/// Incremental extraction from a membership bit stream (bit i set iff x_i in the target set).
class HitExtractor {
 public:
  explicit HitExtractor(ClusterConfig config);

  void feed_bits(std::span<const std::uint64_t> bits, std::size_t count);
  void feed(std::span<const Symbol> symbols, const SubAlphabet& sub);
  /// Closes the open cluster. Throws OrbitTooShort when fewer than n + 1 symbols were fed.
  PointProcessSample finish();

 private:
  void close_cluster();

  ClusterConfig config_;
  std::size_t window_;
  PointProcessSample sample_;
  std::uint64_t position_ = 0;
  std::uint64_t run_ = 0;
  bool open_ = false;
  std::uint64_t last_hit_ = 0;
  std::vector<std::uint64_t> scratch_;
};

/// Throws OrbitTooShort when orbit.size() <= n.
PointProcessSample extract(std::span<const Symbol> orbit, const SubAlphabet& sub,
                           const ClusterConfig& config);

/// Streams an equilibrium orbit of length T through an extractor without storing it.
PointProcessSample simulate_sample(const MarkovSampler& sampler, const SubAlphabet& sub,
                                   const ClusterConfig& config, std::uint64_t length,
                                   std::uint64_t seed);

/// Direct simulation of the limiting marked-Poisson process on [0, horizon) in rescaled time.
/// Each cluster occupies `mark` consecutive integer hits.
PointProcessSample synthetic_marked_poisson(const MarkedPoissonParams& params,
                                            const ClusterConfig& config, double horizon,
                                            std::uint64_t seed);

struct LimitTestReport {
  double lambda = 0.0;  // reference rate
  double empirical_lambda = 0.0;
  double lambda_se = 0.0;
  double lambda_relative_error = 0.0;
  double entrance_lambda = 0.0;
  double entrance_lambda_se = 0.0;
  double entrance_relative_error = 0.0;
  stats::TestResult gap_ks;
  stats::TestResult entrance_ks;
  stats::ChiSquareResult mark_chi;
  std::vector<std::size_t> mark_counts;  // index j holds mark j + 1
  Vector moment_errors;                  // |nu_hat_k - nu_k|, filled by the moments driver
  std::size_t samples = 0;
  std::size_t hits = 0;
  std::size_t clusters = 0;
  std::size_t entrances = 0;
  double observation_length = 0.0;
  bool underpowered = false;  // fewer than 200 pooled clusters
};

LimitTestReport test_limit_law(std::span<const PointProcessSample> samples,
                               const MarkedPoissonParams& params);

}  // namespace hitlaw
