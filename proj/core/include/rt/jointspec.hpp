#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rt/types.hpp"

namespace rt {

struct JointEigenvalue {
  CoForm lambda;
  int algMult = 0;
  int geomMult = 0;
  int jordanOrder = 0;
  double residual = 0.0;  // sigma_min of the stacked [(X_j - lambda_j)]_j
};

struct JointSpecOptions {
  double tol = 1e-7;         // relative stacked-kernel tolerance
  double clusterTol = 1e-7;  // relative cluster radius
  std::uint64_t seed = 0x5eed;
};

struct JointSpectrum {
  std::vector<JointEigenvalue> eigenvalues;
  std::vector<std::string> warnings;
};

/**
 * Joint eigenvalues of a commuting tuple.
 *
 * A seeded random combination sum c_j X_j is Schur-triangularised; its
 * diagonal is clustered and each cluster is moved to a contiguous block by
 * unitary swaps. Because the leading Schur vectors span invariant subspaces
 * of every X_j, lambda_j is the mean of the diagonal of U^H X_j U over the
 * block. Defective clusters split at roughly eps^(1/m); the merge radius
 * grows with the cluster size to recombine them, with a warning.
 */
JointSpectrum jointEigenvalues(const CommutingTuple& tuple, const JointSpecOptions& opts = {});

/// Orthonormal basis of the generalised joint eigenspace at lambda (empty if
/// lambda is not a joint eigenvalue within tol).
Mat weightSpace(const CommutingTuple& tuple, const CoForm& lambda, const JointSpecOptions& opts = {});

/// Minimal J with X^alpha(lambda) W = 0 for all |alpha| = J; 0 if lambda is
/// not a joint eigenvalue.
int jordanOrder(const CommutingTuple& tuple, const CoForm& lambda, const JointSpecOptions& opts = {});

/// sigma_min of the stacked matrix [(X_j - lambda_j)]_j.
double stackedKernelResidual(const CommutingTuple& tuple, const CoForm& lambda);

struct SpectralProjector {
  enum class Method { Contour, Power };
  Mat P;
  cd targetEigenvalue;
  Method method = Method::Contour;
  int rank = 0;
  int nodes = 0;       // contour nodes used
  int iterations = 0;  // squarings used
  double rate = 0.0;   // spectral radius of R(Id - P) for the power method
};

/**
 * (1/2 pi i) closed integral of (z - F)^{-1} over |z| = eps by the trapezoid
 * rule. Starts at `nodes` and doubles until the update is below 1e-13.
 * Throws if an eigenvalue of F lies within 0.1 eps of the circle.
 */
SpectralProjector projectorContour(const Mat& F, double eps, int nodes = 64);

/**
 * lim R^k by repeated squaring, at most maxIter squarings. Throws if the
 * differences ||R^{2k} - R^k|| stop contracting or if the limit is not fixed
 * by R (peripheral eigenvalue other than 1, or a Jordan block at 1).
 */
SpectralProjector projectorPower(const Mat& R, int maxIter = 64, double tol = 1e-12);

}  // namespace rt
