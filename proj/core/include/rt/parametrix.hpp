#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rt/koszul.hpp"
#include "rt/types.hpp"

namespace rt {

enum class ProfileFamily {
  Bump,      // exp(-1/(1-u^2)) on (center - width/2, center + width/2), even about the center
  SkewBump,  // (1 + u/2) * Bump, positive but not even
};

/** \brief Smooth non-negative cutoff psi with compact support in (0, inf) and unit mass. */
struct CutoffProfile {
  ProfileFamily family = ProfileFamily::Bump;
  double center = 1.0;
  double width = 1.0;
  double norm = 1.0;  // 1 / integral of the unnormalised shape

  double lo() const { return center - 0.5 * width; }
  double hi() const { return center + 0.5 * width; }
  double operator()(double t) const;
  /// Maximum of psi, used for rejection sampling.
  double peak() const;
};

CutoffProfile makeProfile(ProfileFamily family = ProfileFamily::Bump, double center = 1.0, double width = 1.0);

ProfileFamily parseProfileFamily(const std::string& name);

struct QuadratureOptions {
  int nodes = 64;            // initial Gauss-Legendre nodes
  double relTol = 1e-10;     // doubling stops when the relative change drops below this
  int maxNodes = 8192;
};

/// Integral of f(t) psi(t) dt over the support of psi, doubling nodes until converged.
cd integrateProfile(const CutoffProfile& p, const std::function<cd(double)>& f, const QuadratureOptions& q = {});

/// psi^(s) = int e^{-i s t} psi(t) dt.
cd psiHat(const CutoffProfile& p, cd s, const QuadratureOptions& q = {});

/// int (1 - e^{-t z}) / z psi(t) dt = int_0^inf e^{-t z} chi(t) dt, chi(t) = int_t^inf psi.
cd chiLaplace(const CutoffProfile& p, cd z, const QuadratureOptions& q = {});

/** \brief R(lambda) = prod_j int e^{-t_j (X_j + lambda_j)} psi_j(t_j) dt_j. */
struct AveragedOperator {
  Mat R;
  CoForm lambda;
  std::vector<CutoffProfile> profiles;
  int quadratureNodes = 0;     // 0 when every factor used the eigendecomposition
  bool eigendecomposed = true;
};

/// One factor R_j; diagonalizable generators use an eigendecomposition,
/// defective ones Gauss-Legendre quadrature of the matrix exponential.
Mat averagedFactor(const Mat& X, cd lambda, const CutoffProfile& p, const QuadratureOptions& q = {},
                   int* nodesUsed = nullptr);

AveragedOperator buildR(const CommutingTuple& gens, const CoForm& lambda, const std::vector<CutoffProfile>& profiles,
                        const QuadratureOptions& q = {});

/**
 * \brief F(lambda) together with its Koszul homotopy witness.
 *
 * F = Id - prod_k R_k with R_k in the positive form above (the alternating
 * form with -chi' differs by (-1)^kappa, which cancels in F). The witness
 * is Q = delta_{Qt} with Qt_j = -Q'_j prod_{k<j} R_k and
 * Q'_j = int_0^inf e^{-t (X_j + lambda_j)} chi_j(t) dt, so that
 * d Q + Q d = F (x) Id.
 */
struct FOperator {
  Mat F;
  GradedOperator Q;
  double homotopyDefect = 0.0;
};

FOperator buildF(const CommutingTuple& gens, const CoForm& lambda, const std::vector<CutoffProfile>& profiles,
                 const QuadratureOptions& q = {});

struct ModulusOneResult {
  bool hasPeripheral = false;
  bool atOne = true;            // every peripheral eigenvalue equals 1 within tol
  std::vector<cd> peripheral;   // eigenvalues with |tau| >= 1 - tol
  Mat eigvecs;                  // eigenvectors for eigenvalues within tol of 1
  double kernelResidual = 0.0;  // max ||(X_j + lambda_j) v|| over those eigenvectors
  bool inconsistent = false;    // flagged as a truncation artifact
  std::string diagnostic;
};

ModulusOneResult modulusOneTest(const AveragedOperator& R, const CommutingTuple& gens, double tol = 1e-8);

/** \brief Candidate joint resonance with both detector residuals. */
struct Resonance {
  CoForm lambda;
  int multiplicity = 1;
  std::vector<int> cohomology;
  double residualKernel = 0.0;
  double residualF = 0.0;
  std::string status = "confirmed";
};

/**
 * A lambda-family of tuples T_j(lambda) whose joint kernel marks resonances.
 * T_j may depend on lambda_j only; dT returns dT_j/dlambda_j. F is the second
 * detector, singular at resonances.
 */
struct TupleFamily {
  int kappa = 0;
  int dim = 0;
  std::function<std::vector<Mat>(const CoForm&)> T;
  std::function<std::vector<Mat>(const CoForm&)> dT;
  std::function<Mat(const CoForm&)> F;
};

/// T_j = X_j + lambda_j, F = Id - R(lambda).
TupleFamily generatorFamily(const CommutingTuple& gens, const std::vector<CutoffProfile>& profiles);

struct DetectOptions {
  double tol = 1e-8;          // relative sigma_min threshold for both detectors
  double seedThreshold = -1;  // refine only grid points with sigma_min below this (negative: all)
  int maxSteps = 50;
  double mergeTol = 1e-6;
};

/// sigma_min of the stacked [T_j(lambda)]_j.
double stackedSigmaMin(const TupleFamily& fam, const CoForm& lambda);

/// Damped Gauss-Newton on the stacked sigma_min objective.
CoForm refineCandidate(const TupleFamily& fam, const CoForm& start, int maxSteps = 50);

/// Evaluate both detectors at lambda and set the status.
Resonance classifyCandidate(const TupleFamily& fam, const CoForm& lambda, const DetectOptions& opts);

std::vector<Resonance> resonanceDetect(const TupleFamily& fam, const std::vector<CoForm>& grid,
                                       const DetectOptions& opts = {});

}  // namespace rt
