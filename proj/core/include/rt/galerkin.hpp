#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "rt/models.hpp"
#include "rt/parametrix.hpp"
#include "rt/types.hpp"

namespace rt {

using SpMat = Eigen::SparseMatrix<cd>;

struct EscapeValues {
  double high = 4.0;      // on the cone around Es*
  double low = -0.25;     // on the cone around Eu*
  double neutral = 0.0;   // in between
};

/// Cone half-angles measured in the dual eigen-coordinates:
/// theta = atan(|Eu* part| / |Es* part|); the Es* cone is theta <= stable,
/// the Eu* cone is theta >= pi/2 - unstable.
struct ConeAngles {
  double stable = 0.35;
  double unstable = 0.35;
};

struct EscapeOptions {
  double R = 1.0;
  int sphereGrid = 10000;
  int maxShrink = 5;
  double slack = 1e-6;
  bool swapRoles = false;  // exchange Es* and Eu* (invalid on purpose)
  bool isotropic = false;  // m == 1 (invalid on purpose)
};

/// Order function and escape function of one factor of the model.
struct FactorEscape {
  int dim = 0;
  RMat dualBasis;      // columns: eigenvectors of the transposed monodromies
  RMat dualInverse;    // coordinates in that basis
  std::vector<int> stableCols, unstableCols;
  ConeAngles cones;
  EscapeValues values;
  double R = 1.0;
  bool isotropic = false;
  std::vector<RMat> dualMaps;  // transposed chamber step prod_j M_j^{n_j}
  IVec step;                   // the exponents n_j
  double stepTime = 1.0;       // flow time along A0 covered by one step

  /// Angle coordinate in [0, pi/2]; 0 on Es*, pi/2 on Eu*.
  double theta(const RVec& xi) const;
  double m(const RVec& xi) const;
  double G(const RVec& xi) const;
};

struct EscapeProfile {
  std::vector<FactorEscape> factors;
  ConeAngles requested;
  ConeAngles used;
  int shrinkCount = 0;
  double cX = 0.0;                // minimal decrease of G per unit A0-time inside the strict cones
  double monotonicitySlack = 0.0; // max of m(D xi) - m(xi) over the sphere grid, D the dual chamber step
  int gridPoints = 0;
};

/**
 * Build and verify the escape function. Violations of the range or
 * monotonicity conditions shrink the cones (at most maxShrink times) and
 * then raise an Error.
 */
EscapeProfile buildEscape(const SuspensionModel& model, const ConeAngles& cones = {}, const EscapeValues& values = {},
                          const EscapeOptions& opts = {});

/// Lattice ball |k| <= K in Z^d, ordered lexicographically.
struct LatticeBall {
  int dim = 0;
  int K = 0;
  std::vector<IVec> modes;
  std::map<std::vector<long long>, int> index;
  int find(const IVec& k) const;
  int size() const { return static_cast<int>(modes.size()); }
};

LatticeBall latticeBall(int dim, int K);

/// Maximum K per axis for a factor of dimension d.
int truncationCeiling(int dim);

/// Fourier coefficients of e^{-lambda r} (series truncated once terms drop below 1e-14).
std::vector<RoofMode> expRoofCoefficients(const Roof& r, cd lambda);

/// Fourier coefficients of -r e^{-lambda r}, the lambda-derivative.
std::vector<RoofMode> expRoofDerivative(const Roof& r, cd lambda);

struct FactorTruncation {
  LatticeBall ball;
  RVec weights;              // log weights N G(k)
  std::vector<SpMat> L;      // weighted twisted transfer matrices, one per generator of the factor
  double commDefect = 0.0;
};

/**
 * \brief Weighted truncated twisted transfer operators.
 *
 * L_j(lambda) g = (e^{-lambda_j r_j} g) o M_j, so mode k goes to M_j^T k; in
 * the weighted basis the entry from a to b is scaled by e^{N (G(b) - G(a))}.
 */
struct TruncatedGenerator {
  int K = 0;
  int N = 0;
  CoForm lambda;
  std::vector<FactorTruncation> factors;
  double commDefect = 0.0;
};

TruncatedGenerator buildTruncation(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                                   const CoForm& lambda);

/// One factor only; lambda holds the factor's coordinates.
FactorTruncation buildFactorTruncation(const SuspensionModel& model, int factor, const FactorEscape& escape, int K,
                                       int N, const CoForm& lambda, bool derivative = false);

/**
 * Modes lying on cycles of every truncated monodromy of a factor. On its
 * complement the truncated monomial matrices are nilpotent, so for constant
 * roofs the Koszul cohomology of L - Id equals that of its restriction here.
 */
std::vector<int> coreModes(const SuspensionModel& model, int factor, int K);

struct Window {
  double beta = 0.0;          // trusted half-space Re lambda(A0) > beta
  double betaTheory = 0.0;    // -N cX + cL2
  double betaEmpirical = 0.0; // from refinement stability of eigenvalues near modulus one
  double cX = 0.0;
  double cL2 = 0.0;
  int K = 0;
  int N = 0;
  RVec A0;
  bool contains(const CoForm& lambda) const;
  double reOf(const CoForm& lambda) const;
};

struct ResonanceSearch {
  double imMax = 13.0;        // |Im lambda_j| range
  double reMax = 0.5;         // search up to Re lambda_j = reMax (beyond the axis on purpose)
  double gridStep = 0.75;     // seed grid spacing
  double stabilityTol = 1e-5; // K -> K+8, N -> N+1
  int refineK = 8;
  DetectOptions detect;
  int denseK = 0;             // ball radius for variable-roof factors (0: min(K, 10))
};

/// beta = max(-N cX + cL2, empirical boundary); the search supplies denseK and refineK.
Window calibrateWindow(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                       const ResonanceSearch& search = {});

/// Smallest N with -N cX <= -depth.
int calibrateN(const EscapeProfile& escape, double depth = 1.0);

struct WindowResult {
  Window window;
  std::vector<Resonance> resonances;
  std::vector<std::string> notes;
};

/**
 * Resonances in the trusted window: per factor, seeds refined by damped
 * Gauss-Newton on the truncated family T_j = L_j - Id, both detectors
 * evaluated, candidates kept only if stable under K -> K+8 and N -> N+1;
 * factors are combined by Cartesian product and Kunneth.
 */
WindowResult resonancesInWindow(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                                const ResonanceSearch& search = {});

/// Resonances of one factor (no window filter on the product).
std::vector<Resonance> factorResonances(const SuspensionModel& model, const EscapeProfile& escape, int factor, int K,
                                        int N, double beta, const ResonanceSearch& search,
                                        std::vector<std::string>* notes = nullptr);

/// h^{(1)} * h^{(2)} as graded convolution.
std::vector<int> kunneth(const std::vector<int>& a, const std::vector<int>& b);

/// Dense tuple T_j = L_j(lambda) - Id on the full (tensor) truncation; small K only.
std::vector<Mat> denseTuple(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                            const CoForm& lambda);

struct Provenance {
  std::string model;
  int K = 0;
  int N = 0;
  ConeAngles cones;
  std::uint64_t seed = 0;
  Window window;
};

}  // namespace rt
