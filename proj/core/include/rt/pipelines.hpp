#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rt/config.hpp"
#include "rt/galerkin.hpp"
#include "rt/io.hpp"
#include "rt/measures.hpp"
#include "rt/suites.hpp"

namespace rt {

/// Process exit codes of the runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,        // a check suite failed or the input tuple does not commute
  kExitConfig = 2,        // invalid configuration
  kExitInconsistent = 3,  // mixing verdict "inconsistent"
  kExitRuntime = 4,
};

struct RunResult {
  int exitCode = kExitOk;
  std::vector<std::pair<std::string, std::string>> files;  // file name, contents
  std::vector<std::string> summary;                        // one line each, for the terminal

  std::vector<SuiteReport> suites;
  std::vector<Resonance> resonances;
  Window window;
  EscapeProfile escape;
  std::vector<EstimateRow> estimates;
  std::vector<CorrelationSeries> correlations;
  MixingVerdict verdict;
};

/// Identity and oracle suites on generated tuples; exit code 0 iff all pass.
RunResult runKoszulCheck(const ExperimentConfig& cfg);
/// Joint spectrum of the configured or generated tuple.
RunResult runJointSpec(const ExperimentConfig& cfg);
/// Escape function, window calibration and resonances; CSV plus JSON provenance.
RunResult runResonances(const ExperimentConfig& cfg);
/// Birkhoff and Cesaro estimates for seeded random (u, v) pairs.
RunResult runMeasures(const ExperimentConfig& cfg);
/// Resonance scan, fiber-character correlations along A0 and the verdict.
RunResult runMixing(const ExperimentConfig& cfg);
/// Resonance CSV (cfg.input) to scatter data.
RunResult emitPlotData(const ExperimentConfig& cfg);

/// Validates the config and dispatches on cfg.command.
RunResult runCommand(const ExperimentConfig& cfg);

/// Effective N: the configured value or calibrateN(escape, depth).
int effectiveN(const GalerkinConfig& g, const EscapeProfile& escape);

}  // namespace rt
