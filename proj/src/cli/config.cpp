#include "hitlaw/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hitlaw/error.hpp"

namespace hitlaw::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::ConfigParse, field + ": " + message);
}

const json* member(const json& object, const char* key) {
  const auto it = object.find(key);
  return it == object.end() || it->is_null() ? nullptr : &*it;
}

std::uint64_t as_uint(const json& value, const std::string& field) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  fail(field, "expected a nonnegative integer");
}

double as_double(const json& value, const std::string& field) {
  if (!value.is_number()) fail(field, "expected a number");
  return value.get<double>();
}

std::string as_string(const json& value, const std::string& field) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  fail(field, "expected a string");
}

std::vector<double> as_doubles(const json& value, const std::string& field) {
  if (!value.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_double(value[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

void check_keys(const json& object, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!object.is_object()) fail(field, "expected an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(field.empty() ? key : field + "." + key, "unknown field");
  }
}

PotentialSpec parse_potential(const json& value, const std::string& field) {
  PotentialSpec spec;
  if (value.is_string()) {
    spec.kind = value.get<std::string>();
    if (spec.kind != "uniform" && spec.kind != "zero") fail(field, "expected \"uniform\", \"zero\" or an object");
    return spec;
  }
  check_keys(value, field, {"kind", "weights", "block_length", "table", "default", "probabilities"});
  if (const json* k = member(value, "kind")) spec.kind = as_string(*k, field + ".kind");
  if (spec.kind == "matrix") {
    const json* w = member(value, "weights");
    if (!w || !w->is_array()) fail(field + ".weights", "expected a matrix of numbers");
    for (std::size_t i = 0; i < w->size(); ++i) spec.weights.push_back(as_doubles((*w)[i], field + ".weights[" + std::to_string(i) + "]"));
  } else if (spec.kind == "block") {
    if (const json* k = member(value, "block_length")) spec.block_length = as_uint(*k, field + ".block_length");
    if (spec.block_length < 2) fail(field + ".block_length", "must be >= 2");
    if (const json* d = member(value, "default")) spec.default_value = as_double(*d, field + ".default");
    if (const json* t = member(value, "table")) {
      if (!t->is_object()) fail(field + ".table", "expected an object mapping words to weights");
      for (const auto& [word, weight] : t->items()) spec.table[word] = as_double(weight, field + ".table." + word);
    }
  } else if (spec.kind == "bernoulli") {
    const json* p = member(value, "probabilities");
    if (!p) fail(field + ".probabilities", "required for kind bernoulli");
    spec.probabilities = as_doubles(*p, field + ".probabilities");
  } else if (spec.kind != "uniform" && spec.kind != "zero") {
    fail(field + ".kind", "unknown potential kind '" + spec.kind + "'");
  }
  return spec;
}

json potential_json(const PotentialSpec& spec) {
  json out{{"kind", spec.kind}};
  if (spec.kind == "matrix") out["weights"] = spec.weights;
  if (spec.kind == "block") {
    out["block_length"] = spec.block_length;
    out["table"] = spec.table;
    out["default"] = spec.default_value;
  }
  if (spec.kind == "bernoulli") out["probabilities"] = spec.probabilities;
  return out;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  check_keys(doc, "", {"name", "system", "potential", "delta", "n_values", "orbit_length", "replicas", "seed",
                       "window", "test_function", "cluster", "matching", "output"});
  if (const json* v = member(doc, "name")) cfg.name = as_string(*v, "name");

  const json* system = member(doc, "system");
  if (!system) fail("system", "required");
  check_keys(*system, "system", {"matrix", "labels"});
  const json* matrix = member(*system, "matrix");
  if (!matrix || !matrix->is_array() || matrix->empty()) fail("system.matrix", "expected a nonempty array of rows");
  for (std::size_t i = 0; i < matrix->size(); ++i) {
    const std::string row_field = "system.matrix[" + std::to_string(i) + "]";
    const json& row = (*matrix)[i];
    if (!row.is_array()) fail(row_field, "expected an array of 0/1 entries");
    if (row.size() != matrix->size()) {
      fail(row_field, "expected " + std::to_string(matrix->size()) + " entries, got " + std::to_string(row.size()));
    }
    std::vector<int> entries;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j].is_number_integer() || (row[j].get<int>() != 0 && row[j].get<int>() != 1)) {
        fail(row_field + "[" + std::to_string(j) + "]", "expected 0 or 1");
      }
      entries.push_back(row[j].get<int>());
    }
    cfg.matrix.push_back(std::move(entries));
  }
  if (const json* labels = member(*system, "labels")) {
    if (!labels->is_array() || labels->size() != cfg.matrix.size()) {
      fail("system.labels", "expected one label per matrix row");
    }
    for (std::size_t i = 0; i < labels->size(); ++i) cfg.labels.push_back(as_string((*labels)[i], "system.labels[" + std::to_string(i) + "]"));
  }

  if (const json* v = member(doc, "potential")) cfg.potential = parse_potential(*v, "potential");

  const json* delta = member(doc, "delta");
  if (!delta || !delta->is_array() || delta->empty()) fail("delta", "expected a nonempty list of symbols");
  for (std::size_t i = 0; i < delta->size(); ++i) cfg.delta.push_back(as_string((*delta)[i], "delta[" + std::to_string(i) + "]"));

  if (const json* v = member(doc, "n_values")) {
    if (!v->is_array() || v->empty()) fail("n_values", "expected a nonempty list");
    cfg.n_values.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto n = as_uint((*v)[i], "n_values[" + std::to_string(i) + "]");
      if (n == 0) fail("n_values[" + std::to_string(i) + "]", "must be >= 1");
      cfg.n_values.push_back(n);
    }
  }
  if (const json* v = member(doc, "orbit_length")) cfg.orbit_length = as_uint(*v, "orbit_length");
  if (const json* v = member(doc, "replicas")) cfg.replicas = as_uint(*v, "replicas");
  if (cfg.replicas == 0) fail("replicas", "must be >= 1");
  if (const json* v = member(doc, "seed")) cfg.seed = as_uint(*v, "seed");
  if (const json* v = member(doc, "window")) cfg.window = as_uint(*v, "window");

  if (const json* v = member(doc, "test_function")) {
    if (v->is_string()) {
      cfg.test_function.kind = v->get<std::string>();
    } else {
      check_keys(*v, "test_function", {"kind", "knots", "values"});
      if (const json* k = member(*v, "kind")) cfg.test_function.kind = as_string(*k, "test_function.kind");
      if (const json* k = member(*v, "knots")) cfg.test_function.knots = as_doubles(*k, "test_function.knots");
      if (const json* k = member(*v, "values")) cfg.test_function.values = as_doubles(*k, "test_function.values");
    }
    const auto& kind = cfg.test_function.kind;
    if (kind != "tent" && kind != "plateau" && kind != "table") fail("test_function.kind", "expected tent, plateau or table");
  }

  if (const json* v = member(doc, "cluster")) {
    check_keys(*v, "cluster", {"m_max", "n", "window"});
    if (const json* k = member(*v, "m_max")) cfg.cluster.m_max = as_uint(*k, "cluster.m_max");
    if (const json* k = member(*v, "n")) cfg.cluster.n = as_uint(*k, "cluster.n");
    if (const json* k = member(*v, "window")) cfg.cluster.window = as_uint(*k, "cluster.window");
    if (cfg.cluster.m_max == 0 || cfg.cluster.n == 0) fail("cluster", "m_max and n must be >= 1");
  }

  if (const json* v = member(doc, "matching")) {
    check_keys(*v, "matching", {"factors", "potentials", "n", "orbit_length", "replicas", "epsilon"});
    MatchingSpec m;
    if (const json* k = member(*v, "factors")) m.factors = as_uint(*k, "matching.factors");
    if (m.factors < 2) fail("matching.factors", "must be >= 2");
    if (const json* k = member(*v, "potentials")) {
      if (!k->is_array() || k->empty()) fail("matching.potentials", "expected a nonempty list");
      for (std::size_t i = 0; i < k->size(); ++i) m.potentials.push_back(parse_potential((*k)[i], "matching.potentials[" + std::to_string(i) + "]"));
      if (m.potentials.size() != 1 && m.potentials.size() != m.factors) {
        fail("matching.potentials", "expected one shared entry or one per factor");
      }
    } else {
      m.potentials.push_back(PotentialSpec{});
    }
    if (const json* k = member(*v, "n")) m.n = as_uint(*k, "matching.n");
    if (m.n == 0) fail("matching.n", "must be >= 1");
    if (const json* k = member(*v, "orbit_length")) m.orbit_length = as_uint(*k, "matching.orbit_length");
    if (const json* k = member(*v, "replicas")) m.replicas = as_uint(*k, "matching.replicas");
    if (m.replicas == 0) fail("matching.replicas", "must be >= 1");
    if (const json* k = member(*v, "epsilon")) m.epsilon = as_double(*k, "matching.epsilon");
    cfg.matching = std::move(m);
  }

  if (const json* v = member(doc, "output")) {
    check_keys(*v, "output", {"json", "csv_dir"});
    if (const json* k = member(*v, "json")) cfg.output.json = as_string(*k, "output.json");
    if (const json* k = member(*v, "csv_dir")) cfg.output.csv_dir = as_string(*k, "output.csv_dir");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, path + ": " + e.what());
  }
  return parse_config(doc);
}

json canonical_json(const ExperimentConfig& cfg) {
  json out;
  out["name"] = cfg.name;
  out["system"] = {{"matrix", cfg.matrix}};
  if (!cfg.labels.empty()) out["system"]["labels"] = cfg.labels;
  out["potential"] = potential_json(cfg.potential);
  out["delta"] = cfg.delta;
  out["n_values"] = cfg.n_values;
  out["orbit_length"] = cfg.orbit_length;
  out["replicas"] = cfg.replicas;
  out["seed"] = cfg.seed;
  out["window"] = cfg.window;
  out["test_function"] = {{"kind", cfg.test_function.kind},
                          {"knots", cfg.test_function.knots},
                          {"values", cfg.test_function.values}};
  out["cluster"] = {{"m_max", cfg.cluster.m_max}, {"n", cfg.cluster.n}, {"window", cfg.cluster.window}};
  if (cfg.matching) {
    json pots = json::array();
    for (const auto& p : cfg.matching->potentials) pots.push_back(potential_json(p));
    out["matching"] = {{"factors", cfg.matching->factors}, {"potentials", pots},
                       {"n", cfg.matching->n},             {"orbit_length", cfg.matching->orbit_length},
                       {"replicas", cfg.matching->replicas}, {"epsilon", cfg.matching->epsilon}};
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

SystemPtr build_config_system(const ExperimentConfig& cfg) {
  std::optional<Alphabet> alphabet;
  if (!cfg.labels.empty()) alphabet = Alphabet(cfg.labels);
  return build_system(cfg.matrix, alphabet);
}

BlockPotential build_potential(const PotentialSpec& spec, const SystemPtr& system,
                               std::optional<RecodingMap>* recoding) {
  const std::size_t ell = system->size();
  if (spec.kind == "uniform") return BlockPotential::constant(system, -std::log(static_cast<double>(ell)));
  if (spec.kind == "zero") return BlockPotential::constant(system, 0.0);
  if (spec.kind == "matrix") {
    if (spec.weights.size() != ell) fail("potential.weights", "expected " + std::to_string(ell) + " rows");
    for (std::size_t i = 0; i < ell; ++i) {
      if (spec.weights[i].size() != ell) fail("potential.weights[" + std::to_string(i) + "]", "expected " + std::to_string(ell) + " entries");
    }
    return BlockPotential::from_dense(system, spec.weights);
  }
  if (spec.kind == "bernoulli") {
    if (spec.probabilities.size() != ell) fail("potential.probabilities", "expected one entry per symbol");
    if (system->transitions() != ell * ell) fail("potential", "bernoulli needs the full shift");
    BlockPotential b = bernoulli_potential(spec.probabilities);
    return BlockPotential(system, Vector(b.edge_weights().begin(), b.edge_weights().end()), b.normalized());
  }
  // block
  auto lookup = [&](std::span<const Symbol> block) {
    const auto it = spec.table.find(format_word(*system, Word{{block.begin(), block.end()}}));
    return it == spec.table.end() ? spec.default_value : it->second;
  };
  for (const auto& [word, weight] : spec.table) {
    if (word.size() != spec.block_length &&
        std::count(word.begin(), word.end(), '.') + 1 != static_cast<std::ptrdiff_t>(spec.block_length)) {
      fail("potential.table." + word, "expected a word of length " + std::to_string(spec.block_length));
    }
  }
  if (spec.block_length == 2) {
    Vector edge(system->transitions());
    for (Symbol a = 0; a < ell; ++a) {
      for (Symbol b : system->successors(a)) {
        const Symbol pair[2] = {a, b};
        edge[*system->edge_index(a, b)] = lookup(pair);
      }
    }
    return BlockPotential(system, std::move(edge));
  }
  auto [recoded, map] = recode_higher_block(*system, spec.block_length);
  BlockPotential phi = BlockPotential::from_blocks(recoded, map, lookup);
  if (recoding) *recoding = std::move(map);
  return phi;
}

TestFunction build_test_function(const TestFunctionSpec& spec) {
  if (spec.kind == "tent") return TestFunction::tent();
  if (spec.kind == "plateau") return TestFunction::plateau();
  try {
    return TestFunction(spec.knots, spec.values);
  } catch (const Error& e) {
    fail("test_function", e.what());
  }
}

Model build_model(const ExperimentConfig& cfg) {
  try {
    SystemPtr base = build_config_system(cfg);
    std::optional<RecodingMap> recoding;
    BlockPotential phi = build_potential(cfg.potential, base, &recoding);
    SystemPtr system = phi.system();
    ThermoSolution raw = pressure(phi);
    ThermoSolution full = pressure(normalize(phi));
    SubAlphabet sub = build_subalphabet(system, cfg.delta);
    SubsystemSolution solution = solve_subsystem(full, sub);
    MarkedPoissonParams params = marked_poisson_params(solution);
    return Model{system, std::move(recoding), std::move(raw), std::move(full), std::move(sub),
                 std::move(solution), std::move(params)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParse) throw;
    throw Error(ErrorCode::ConfigParse, std::string("model: ") + e.what());
  }
}

}  // namespace hitlaw::cli
