#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hitlaw/cli/run.hpp"
#include "hitlaw/error.hpp"

namespace fs = std::filesystem;
using namespace hitlaw;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hitting-time statistics for subshifts of finite type"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  std::size_t threads = 0;
  bool json = false;
  bool csv = false;
  app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "directory for the report and tables");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* replicas_opt = app.add_option("--replicas", replicas, "override the replica count")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "worker threads (0: all cores)");
  app.add_flag("--json", json, "print the JSON report to stdout (default without --out)");
  app.add_flag("--csv", csv, "write CSV tables");
  for (const auto& name : cli::subcommands()) app.add_subcommand(name, "run the " + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kPass : cli::kConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    cli::ExperimentConfig config = cli::load_config(config_path);
    if (*seed_opt) config.seed = seed;
    if (*replicas_opt) config.replicas = replicas;
    const cli::RunResult result = cli::run(subcommand, config, {threads});
    const std::string text = result.report.dump(2) + "\n";
    if (!out_dir.empty()) {
      const fs::path dir(out_dir);
      write_file(dir / (config.output.json.empty() ? "report.json" : config.output.json), text);
      if (csv) {
        for (const auto& t : result.tables) write_file(dir / config.output.csv_dir / t.name, t.content);
      }
    } else if (csv) {
      for (const auto& t : result.tables) std::cout << "# " << t.name << '\n' << t.content;
    }
    if (json || out_dir.empty()) std::cout << text;
    std::cerr << subcommand << ": " << (result.pass ? "all checks passed" : "some checks failed") << '\n';
    return result.pass ? cli::kPass : cli::kCheckFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigParse ? cli::kConfigError : cli::kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return cli::kInternalError;
  }
}
