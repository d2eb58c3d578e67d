#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <tbb/global_control.h>

#include "rt/config.hpp"
#include "rt/io.hpp"
#include "rt/pipelines.hpp"

namespace {

int threadsFromEnv() {
  const char* v = std::getenv("RT_THREADS");
  if (!v || !*v) return 0;
  try {
    const int n = std::stoi(v);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint resonances, physical measures and mixing diagnostics for linear Anosov actions"};
  app.require_subcommand(1);
  std::string configPath, outDir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  const std::pair<const char*, const char*> commands[] = {
      {"check", "identity, joint spectrum and rigidity suites on random commuting tuples"},
      {"jointspec", "joint eigenvalues and Koszul cohomology of a matrix tuple"},
      {"resonances", "resonances of a suspension model in the trusted window"},
      {"measures", "Birkhoff and Cesaro cone averages of random test pairs"},
      {"mixing", "mixing verdict from axis resonances and correlations"},
      {"plotdata", "scatter data from a resonance CSV"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configPath, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", outDir, "output directory (overrides outDir)");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (RT_THREADS when absent)")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  rt::ExperimentConfig cfg;
  try {
    if (!configPath.empty()) cfg = rt::loadConfig(configPath);
    if (!cfg.command.empty() && cfg.command != command)
      throw rt::Error(fmt::format("config error at 'command': config is for '{}', not '{}'", cfg.command, command));
    cfg.command = command;
    if (seed) cfg.seed = *seed;
    if (!outDir.empty()) cfg.outDir = outDir;
    if (threads) cfg.threads = *threads;
    if (cfg.threads == 0) cfg.threads = threadsFromEnv();
    rt::validateConfig(cfg);
  } catch (const rt::Error& e) {
    std::cerr << e.what() << "\n";
    return rt::kExitConfig;
  }

  std::unique_ptr<tbb::global_control> limit;
  if (cfg.threads > 0)
    limit = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                  static_cast<std::size_t>(cfg.threads));
  try {
    const auto result = rt::runCommand(cfg);
    std::cout << "config_hash=" << rt::configHash(cfg) << "\n";
    for (const auto& line : result.summary) std::cout << line << "\n";
    for (const auto& [name, text] : result.files) {
      rt::writeFile(cfg.outDir, name, text);
      std::cout << "wrote " << (std::filesystem::path(cfg.outDir) / name).string() << "\n";
    }
    return result.exitCode;
  } catch (const rt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rt::kExitRuntime;
  }
}
