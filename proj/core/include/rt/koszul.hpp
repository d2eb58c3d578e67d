#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rt/types.hpp"

namespace rt {

inline constexpr int kMaxKappa = 16;

/// Strictly increasing subset of {1..kappa}; one basis vector of the exterior algebra.
struct ExteriorIndex {
  std::vector<int> members;
  int grade() const { return static_cast<int>(members.size()); }
  std::uint32_t mask() const;
  bool operator==(const ExteriorIndex&) const = default;
};

/// basis[j] lists the grade-j indices in lexicographic order.
using ExteriorBasis = std::vector<std::vector<ExteriorIndex>>;

ExteriorBasis exteriorBasis(int kappa);

long long binom(int n, int k);

/// Position of a subset (given as bit mask) inside its grade, lexicographic order.
int exteriorPosition(std::uint32_t mask, int kappa);

/** \brief Graded operator on V (x) Lambda R^kappa.
 *
 * Vectors of grade j are stored basis-major: entry (p*dim + a) is the a-th
 * coordinate of the component along the p-th grade-j basis element.
 * degree = +1: blocks[j] maps grade j -> j+1 (j = 0..kappa-1).
 * degree = -1: blocks[j] maps grade j+1 -> j.
 */
struct GradedOperator {
  int kappa = 0;
  int dim = 0;
  int degree = 1;
  std::vector<Mat> blocks;
};

/// d_{X+lambda}: u (x) e_I -> sum_k (X_k + lambda_k) u (x) e_k ^ e_I.
using KoszulOperator = GradedOperator;

KoszulOperator buildD(const CommutingTuple& tuple, const CoForm& lambda);

/// delta_{Y+lambda}(u (x) e_{i1}^..^e_{il}) = sum_q (-1)^q (Y_{iq}+lambda_{iq}) u (x) e_{I\iq}.
GradedOperator buildDelta(const CommutingTuple& tuple, const CoForm& lambda);

/// Contraction iota_A on Lambda R^kappa (dim = 1, real entries stored complex).
GradedOperator contraction(const RVec& A, int kappa);

/// Lift a scalar graded operator (dim 1) to V (x) Lambda by Kronecker product with Id_n.
GradedOperator liftScalar(const GradedOperator& op, int n);

/// Largest Frobenius norm of consecutive compositions (d d or delta delta).
double squareDefect(const GradedOperator& op);

/// max over grades of ||lower raise + raise lower - Id (x) target||_F.
double anticommutatorDefect(const GradedOperator& raise, const GradedOperator& lower, const Mat& target);

/// Frobenius norm of iota_A d_X + d_X iota_A - X_A (x) Id, maximised over grades.
double iotaHomotopyDefect(const CommutingTuple& tuple, const RVec& A);

/**
 * Frobenius defect of delta_Y d_{X+lambda} + d_{X+lambda} delta_Y + (sum_k (X_k+lambda_k) Y_k) (x) Id.
 * Throws if some pair of X_i, Y_j fails to commute within tolComm; the
 * message names the worst pair.
 */
double homotopyDefect(const CommutingTuple& tupleX, const CommutingTuple& tupleY, const CoForm& lambda,
                      double tolComm = 1e-8);

struct CohomologyResult {
  std::vector<int> dims;   // h_0..h_kappa
  std::vector<int> ranks;  // rank d_j, j = 0..kappa-1
  bool illConditioned = false;
  std::vector<std::string> warnings;
};

/// h_j = dim ker d_j - rank d_{j-1}; ranks from singular values with the
/// cutoff max(rankTol * (largest singular value over all blocks), absFloor).
/// absFloor matters for complexes that are zero up to roundoff, e.g. a
/// restriction to a single weight space.
CohomologyResult cohomologyDims(const KoszulOperator& d, double rankTol = 1e-8, double absFloor = 0.0);

int fredholmIndex(const std::vector<int>& dims);

/// Signs table of the wedge and contraction conventions, one line per entry.
std::string signsTable(int kappa);

}  // namespace rt
