#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <string>
#include <vector>

#include "rt/models.hpp"
#include "rt/parametrix.hpp"
#include "rt/types.hpp"

namespace rt {

/// c e^{2 pi i (k.x + n.shat)} with shat_j = s_j / r_j(x) the fiber fraction.
struct TrigTerm {
  IVec k;
  IVec n;
  cd c;
};

/**
 * \brief Trigonometric polynomial in (base, fiber fraction) coordinates.
 *
 * Terms with k != 0 and n != 0 jump across the roof identification; that is
 * harmless for L^2 pairings.
 */
struct TestFunction {
  int baseDim = 0;
  int kappa = 0;
  std::vector<TrigTerm> terms;

  cd operator()(const SuspensionModel& model, const ModelPoint& p) const;
  /// Exact integral against dx ds when the roofs are constant.
  cd constantRoofIntegral(const SuspensionModel& model) const;
};

TestFunction constantFunction(const SuspensionModel& model, cd value = 1.0);
/// e^{2 pi i n.shat}.
TestFunction fiberCharacter(const SuspensionModel& model, const IVec& n);
/// e^{2 pi i k.x}.
TestFunction baseCharacter(const SuspensionModel& model, const IVec& k);

/**
 * Random (u, v) pair: u = c + 3 terms of modulus <= 0.3 sqrt(2), v = 1 + 3
 * terms of modulus <= 0.15 sqrt(2), c uniform in the unit square; each term
 * carries one base mode and one fiber mode with entries in {-1, 0, 1}.
 */
std::pair<TestFunction, TestFunction> randomTestPair(const SuspensionModel& model, std::mt19937_64& rng);

/// Proper subcone spanned by unit generators inside the Weyl chamber.
struct ConeSpec {
  std::vector<RVec> generators;
};

/// Cone of the given half-angle around A0 (a ray when kappa = 1).
ConeSpec coneAround(const SuspensionModel& model, double halfAngle = 0.2);

/// Minimal |chi(A)| / |A| over the generators and every Lyapunov functional;
/// throws when a generator leaves the chamber or the cone is degenerate.
double conePropernessMargin(const SuspensionModel& model, const ConeSpec& cone);

struct Estimate {
  cd value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

struct SamplingOptions {
  std::size_t nSamples = 100000;
  std::uint64_t seed = 1;
  std::size_t batch = 4096;
};

/**
 * Cone average (1/Vol C_T) int_{C_T} <u o phi_{-A}, v> dA. Directions A are
 * randomly shifted Sobol points distributed by volume on C_T; base points are
 * stratified, fibers uniform with the roof as importance weight.
 */
Estimate birkhoffConeAverage(const SuspensionModel& model, const TestFunction& u, const TestFunction& v,
                             const ConeSpec& cone, double T, const SamplingOptions& opts = {});

/**
 * Weighted Cesaro average of <R_sigma^k u, v>: sigma uniform on the cone
 * section, k drawn with weight (k/N)^{kappa-1} on 1..N, and R_sigma^k realised
 * as the flow for a sum of k independent profile times.
 */
Estimate cesaroRApprox(const SuspensionModel& model, const TestFunction& u, const TestFunction& v, const ConeSpec& cone,
                       const CutoffProfile& profile, int nSteps, const SamplingOptions& opts = {});

struct CorrelationSeries {
  RVec A;
  std::vector<double> t;
  std::vector<cd> values;
  std::vector<double> stderr_;
  std::size_t samples = 0;
  cd meanF = 0.0, meanG = 0.0;
};

/// C(t) = int (f o phi_{-tA}) conj(g) - int f conj(int g) with respect to normalised volume.
CorrelationSeries correlation(const SuspensionModel& model, const RVec& A, const TestFunction& f,
                              const TestFunction& g, const std::vector<double>& tGrid,
                              const SamplingOptions& opts = {});

/// First grid time with |C(t)| < fraction |C(0)|, or a negative value when never reached.
double decayTime(const CorrelationSeries& c, double fraction = 0.1);

struct MixingVerdict {
  std::string verdict;            // "mixing", "non-mixing" or "inconsistent"
  bool uniqueMeasure = false;     // h_0 = 1 at lambda = 0
  std::vector<Resonance> witnesses;  // axis resonances other than a simple 0
  std::vector<double> decayTimes; // per correlation, negative when no decay
  std::vector<std::string> diagnostics;
};

/**
 * Mixing iff 0 is the only axis resonance and h_0(0) = 1; cross-checked
 * against the correlations (decay below 0.1 |C(0)| versus staying above
 * 0.5 |C(0)|). Disagreement yields "inconsistent".
 */
MixingVerdict mixingClassify(const std::vector<Resonance>& resonances, const std::vector<CorrelationSeries>& correlations,
                             double axisTol = 1e-6);

struct EquivarianceReport {
  double defect = 0.0;      // max |mu(f o phi_tA) - e^{-lambda(A) t} mu(f)|
  double stderr_ = 0.0;     // stderr of the worst case
  double worstRatio = 0.0;  // max of defect / stderr over the cases
  int cases = 0;
};

struct EquivarianceOptions {
  std::vector<RVec> directions;  // empty: A0 and two chamber samples
  std::vector<double> times{0.37, 1.5};
  std::vector<TestFunction> tests;  // empty: constant and a fiber-base mix
  SamplingOptions sampling{};
};

/// mu_lambda = e^{lambda.s} dx ds on a constant-roof model (lambda imaginary).
EquivarianceReport equivarianceCheck(const SuspensionModel& model, const CoForm& lambda,
                                     const EquivarianceOptions& opts = {});

}  // namespace rt
