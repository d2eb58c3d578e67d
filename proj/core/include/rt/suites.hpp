#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rt {

/// Outcome of one seeded identity or oracle suite.
struct SuiteReport {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;      // largest normalised defect seen
  double threshold = 0.0;  // pass iff worst < threshold
  std::string worstCase;
  std::vector<std::string> diagnostics;
  double seconds = 0.0;
  bool passed() const { return failures == 0 && cases > 0; }
};

struct SuiteOptions {
  int cases = 0;  // 0: suite default
  std::uint64_t seed = 1;
  int maxDim = 0;    // 0: suite default
  int maxKappa = 3;
  /// Replace one generator of case 0 by a random matrix that breaks commutation.
  bool injectNonCommuting = false;
};

/**
 * d o d, iota-homotopy and delta-homotopy defects on random commuting tuples
 * (polynomial, conjugated Jordan and Hermitian families; default 200 cases,
 * n <= 12). Each defect is divided by the tuple scale; threshold 1e-10.
 */
SuiteReport koszulIdentitySuite(const SuiteOptions& opts = {});

/**
 * jointEigenvalues against the brute-force oracle (set and multiplicities,
 * tolerance 1e-7), Fredholm index 0 at every joint eigenvalue and at a random
 * regular point, and h_j = m binom(kappa, j) for Hermitian tuples. Default
 * 100 cases, n <= 8.
 */
SuiteReport jointSpectrumSuite(const SuiteOptions& opts = {});

/**
 * Averaged operators R(i lambda) of anti-Hermitian diagonalisable tuples:
 * peripheral eigenvalues equal 1 within 1e-8, sup_{k <= 10^4} ||R^k|| stays
 * below the conditioning of the eigenbasis, and the power and contour
 * projectors agree within 1e-8. Default 20 cases, n <= 8.
 */
SuiteReport rigiditySuite(const SuiteOptions& opts = {});

}  // namespace rt
