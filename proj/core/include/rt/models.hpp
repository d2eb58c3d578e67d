#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rt/types.hpp"

namespace rt {

/// One Fourier mode c * e^{2 pi i q.x} of a roof function.
struct RoofMode {
  IVec q;
  cd c;
};

/**
 * \brief Real positive trigonometric polynomial on T^d.
 *
 * Stored with both q and -q present so that the sum is real.
 */
struct Roof {
  int dim = 0;
  std::vector<RoofMode> modes;

  double operator()(const RVec& x) const;
  RVec gradient(const RVec& x) const;
  /// Zeroth Fourier coefficient (the mean).
  double mean() const;
  bool isConstant() const;
  /// Number of distinct +-q pairs with q != 0.
  int modeCount() const;
  /// Minimum over a uniform grid with `per` points per axis.
  double gridMin(int per = 64) const;
  /// Fourier coefficient at q (0 when absent).
  cd coefficient(const IVec& q) const;
};

Roof constantRoof(int dim, double value = 1.0);
/// 1 + eps cos(2 pi mode.x).
Roof cosineRoof(int dim, double eps, const IVec& mode);

/// Block of the model: base torus T^{baseDim} carrying kappa commuting monodromies.
struct Factor {
  int baseDim = 0;
  int kappa = 0;
  std::vector<IMat> monodromies;
  std::vector<IMat> inverses;
  std::vector<Roof> roofs;  // one per generator, functions on this factor's torus
};

/** \brief Constant splitting of the tangent space R^{d + kappa}.
 *
 * Coordinates are ordered (base, fiber). E0 spans the fiber directions. Each
 * column of Eu / Es is a common eigenvector of the monodromies of one factor;
 * the matching Lyapunov functional chi(A) = sum_j A_j log|mu_j| / mean roof_j
 * is the growth rate of that direction under the flow of X_A.
 */
struct Splitting {
  RMat E0, Eu, Es;
  std::vector<RVec> chiU, chiS;  // functionals on R^kappa, one per column
};

/// Open cone {A : every chi keeps its sign at A0}.
struct WeylChamber {
  std::vector<RVec> functionals;
  std::vector<int> signs;
  RVec A0;
};

struct SuspensionModel {
  std::string name;
  int kappa = 0;
  int baseDim = 0;
  std::vector<Factor> factors;
  bool volumePreserving = true;
  Splitting splitting;
  WeylChamber chamber;

  /// Factor owning generator j and its index inside the factor.
  std::pair<int, int> generatorSlot(int j) const;
  int baseOffset(int f) const;
  int generatorOffset(int f) const;
  /// Full d x d monodromy of generator j (identity on the other factors).
  IMat monodromy(int j) const;
  const Roof& roof(int j) const;
  bool constantRoofs() const;
};

/// A point in suspension coordinates: base x in [0,1)^d, fiber 0 <= s_j < r_j(x).
struct ModelPoint {
  RVec x;
  RVec s;
};

/// Builds the (single-factor, kappa = 1) suspension of a hyperbolic 2x2 map.
SuspensionModel catSuspension(const IMat& M, const Roof& roof);

/// Product action; kappa and base dimensions add.
SuspensionModel productAction(const SuspensionModel& m1, const SuspensionModel& m2);

/// Rank-2 action on T^3 x R^2 from units of Z[x]/(x^3 - 3x + 1).
SuspensionModel cartanT3();

/// Generators of cartanT3 as integer matrices (M, N).
std::pair<IMat, IMat> cartanUnits();

struct ModelParams {
  double epsilon = 0.0;
  IVec mode;              // roof mode; defaults to e_1
  int variableFactor = 0; // which factor of a product carries the variable roof
};

/// "arnold", "arnold-product" or "cartan-t3".
SuspensionModel modelByName(const std::string& name, const ModelParams& params = {});

/// Same model with the chamber and splitting labels taken at another A0 inside the chamber.
SuspensionModel recalibrate(const SuspensionModel& model, const RVec& A0);

bool weylChamberTest(const SuspensionModel& model, const RVec& A);

/// Uniform direction on the unit sphere of R^kappa conditioned on the chamber.
RVec sampleChamberDirection(const SuspensionModel& model, std::mt19937_64& rng);

/// Canonical reduction into the fundamental domain.
ModelPoint reduce(const SuspensionModel& model, ModelPoint p);

/// phi_t^{X_A}(p): fibers move by t A, roof returns apply the monodromy.
ModelPoint flow(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p);

/// Flow together with its tangent map applied to v in R^{d + kappa}.
ModelPoint flowTangent(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p, RVec& v);

/// Number of roof returns of generator j along the flow (signed).
std::vector<long long> returnCounts(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p);

/// Uniform point with respect to the invariant volume dx ds.
ModelPoint samplePoint(const SuspensionModel& model, std::mt19937_64& rng);

struct GrowthEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/**
 * Exponential growth rate of the L^2 norm of the transfer operator along A.
 * Volume-preserving models return 0 exactly; otherwise a Monte-Carlo upper
 * estimate from log Jacobians of phi_t over sampled points.
 */
GrowthEstimate cL2(const SuspensionModel& model, const RVec& A, std::size_t samples = 2000,
                   std::uint64_t seed = 1, double t = 5.0);

}  // namespace rt
