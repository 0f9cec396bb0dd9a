#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hitlaw/matching.hpp"
#include "hitlaw/moments.hpp"
#include "hitlaw/sft.hpp"
#include "hitlaw/subsystem.hpp"
#include "hitlaw/thermo.hpp"

namespace hitlaw::cli {

struct PotentialSpec {
  std::string kind = "uniform";  // uniform | zero | matrix | block | bernoulli
  std::vector<std::vector<double>> weights;   // matrix
  std::size_t block_length = 2;               // block
  std::map<std::string, double> table;        // block: word label -> weight
  double default_value = 0.0;                 // block: weight of unlisted blocks
  std::vector<double> probabilities;          // bernoulli, full shift only
};

struct TestFunctionSpec {
  std::string kind = "tent";  // tent | plateau | table
  std::vector<double> knots;
  std::vector<double> values;
};

struct ClusterSpec {
  std::size_t m_max = 5;
  std::size_t n = 40;
  std::size_t window = 0;  // 0: floor(n/m)
};

struct MatchingSpec {
  std::size_t factors = 2;
  std::vector<PotentialSpec> potentials;  // one per factor, or a single shared entry
  std::size_t n = 10;
  std::uint64_t orbit_length = 1'000'000;
  std::size_t replicas = 4;
  double epsilon = 0.01;
};

struct OutputSpec {
  std::string json;     // report path, relative to --out
  std::string csv_dir;  // directory for tables, relative to --out
};

struct ExperimentConfig {
  std::string name;
  std::vector<std::vector<int>> matrix;
  std::vector<std::string> labels;
  PotentialSpec potential;
  std::vector<std::string> delta;
  std::vector<std::size_t> n_values{10};
  std::uint64_t orbit_length = 1'000'000;
  std::size_t replicas = 4;
  std::uint64_t seed = 1;
  std::size_t window = 0;  // cluster gap threshold for simulations, 0: n
  TestFunctionSpec test_function;
  ClusterSpec cluster;
  std::optional<MatchingSpec> matching;
  OutputSpec output;
};

/// Throws Error(ConfigParse) naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::string& path);

/// Canonical form of every field except output paths.
nlohmann::json canonical_json(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct Model {
  SystemPtr system;          // after recoding when potential.kind == block with k > 2
  std::optional<RecodingMap> recoding;
  ThermoSolution raw;        // pressure of the configured potential
  ThermoSolution full;       // normalized potential
  SubAlphabet sub;
  SubsystemSolution solution;
  MarkedPoissonParams params;
};

SystemPtr build_config_system(const ExperimentConfig& config);
BlockPotential build_potential(const PotentialSpec& spec, const SystemPtr& system,
                               std::optional<RecodingMap>* recoding = nullptr);
/// Module errors are rethrown as ConfigParse with context.
Model build_model(const ExperimentConfig& config);
TestFunction build_test_function(const TestFunctionSpec& spec);

}  // namespace hitlaw::cli
