#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rt/galerkin.hpp"
#include "rt/models.hpp"
#include "rt/parametrix.hpp"

namespace rt {

struct ModelConfig {
  std::string name = "arnold";
  double epsilon = 0.0;
  std::vector<long long> mode;  // empty: e_1
  int variableFactor = 0;
  std::vector<double> A0;       // empty: the model's default
};

struct GalerkinConfig {
  int K = 32;
  int N = 0;             // 0: calibrated from c_X and depth
  double depth = 1.0;    // calibrated N pushes -N c_X below -depth
  ConeAngles cones;
  ResonanceSearch search;
};

struct ProfileConfig {
  std::string family = "bump";
  double center = 1.0;
  double width = 1.0;
};

struct MeasuresConfig {
  std::size_t nSamples = 100000;
  double T = 30.0;
  double coneHalfAngle = 0.3;
  int pairs = 10;
  int cesaroSteps = 30;
  ProfileConfig profile;
};

struct MixingConfig {
  double tMax = 45.0;
  double tStep = 1.5;
  double axisTol = 1e-6;
};

struct CheckConfig {
  int identityCases = 200;
  int spectrumCases = 100;
  int rigidityCases = 20;
  int maxKappa = 3;
  bool injectNonCommuting = false;
};

/// Input of the jointspec command: explicit matrices or a generated tuple.
struct JointSpecConfig {
  std::vector<Mat> matrices;          // {rows, cols, re, im} records
  std::string generate = "jordan";    // used when matrices is empty: jordan, polynomial, hermitian
  int dim = 6;
  int kappa = 2;
};

struct Tolerances {
  double rank = 1e-8;
  double comm = 1e-8;
  double jointspec = 1e-7;
  double cluster = 1e-7;
};

struct ExperimentConfig {
  std::string command;
  std::optional<std::uint64_t> seed;
  ModelConfig model;
  GalerkinConfig galerkin;
  MeasuresConfig measures;
  MixingConfig mixing;
  CheckConfig check;
  JointSpecConfig jointspec;
  Tolerances tolerances;
  std::string input;   // plotdata: resonance CSV to convert
  std::string outDir = ".";
  int threads = 0;     // 0: library default
};

/// Commands that draw random numbers and therefore require a seed.
bool isStochastic(const ExperimentConfig& cfg);

/**
 * Parse a JSON config. Unknown keys, wrong types and out-of-range values
 * throw Error naming the offending key path.
 */
ExperimentConfig parseConfig(const std::string& jsonText);
ExperimentConfig loadConfig(const std::string& path);

/// Semantic checks: known command and model, K within the truncation ceiling, seed present when needed.
void validateConfig(const ExperimentConfig& cfg);

/// Canonical JSON of the effective configuration (sorted keys, all defaults filled in).
std::string canonicalConfig(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonicalConfig without outDir and threads, as 16 hex digits.
std::string configHash(const ExperimentConfig& cfg);

SuspensionModel buildModel(const ModelConfig& mc);
CutoffProfile buildProfile(const ProfileConfig& pc);

}  // namespace rt
