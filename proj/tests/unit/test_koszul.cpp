#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"
#include "rt/tuples.hpp"

using namespace rt;
using rt::tuples::jordanTuple;
using rt::tuples::polynomialTuple;
using rt::tuples::symmetricTuple;

namespace {

// Sign of the permutation sorting the list (inversion count).
int permutationSign(const std::vector<int>& v) {
  int inv = 0;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      if (v[a] > v[b]) ++inv;
  return inv % 2 ? -1 : 1;
}

int indexOf(const std::vector<ExteriorIndex>& grade, const std::vector<int>& members) {
  for (std::size_t p = 0; p < grade.size(); ++p)
    if (grade[p].members == members) return static_cast<int>(p);
  return -1;
}

// d assembled from e_k ^ e_I = sign(k, I) e_{sort(k, I)} by explicit permutation parity.
std::vector<Mat> oracleD(const std::vector<Mat>& X, const CoForm& l) {
  const int kappa = static_cast<int>(X.size());
  const int n = static_cast<int>(X[0].rows());
  const auto basis = exteriorBasis(kappa);
  std::vector<Mat> blocks;
  for (int j = 0; j < kappa; ++j) {
    Mat B = Mat::Zero(n * basis[j + 1].size(), n * basis[j].size());
    for (std::size_t p = 0; p < basis[j].size(); ++p)
      for (int k = 1; k <= kappa; ++k) {
        auto I = basis[j][p].members;
        if (std::find(I.begin(), I.end(), k) != I.end()) continue;
        std::vector<int> word{k};
        word.insert(word.end(), I.begin(), I.end());
        const int s = permutationSign(word);
        std::sort(word.begin(), word.end());
        const int q = indexOf(basis[j + 1], word);
        Mat Xk = X[k - 1] + l[k - 1] * Mat::Identity(n, n);
        B.block(q * n, p * n, n, n) += double(s) * Xk;
      }
    blocks.push_back(B);
  }
  return blocks;
}

CommutingTuple tupleOf(std::vector<Mat> m) { return makeTuple(std::move(m)); }

}  // namespace

TEST(ExteriorBasis, SmallRanks) {
  auto b1 = exteriorBasis(1);
  ASSERT_EQ(b1.size(), 2u);
  EXPECT_TRUE(b1[0][0].members.empty());
  EXPECT_EQ(b1[1][0].members, std::vector<int>{1});

  auto b2 = exteriorBasis(2);
  EXPECT_EQ(b2[1][0].members, std::vector<int>{1});
  EXPECT_EQ(b2[1][1].members, std::vector<int>{2});
  EXPECT_EQ(b2[2][0].members, (std::vector<int>{1, 2}));

  auto b3 = exteriorBasis(3);
  std::vector<std::size_t> sizes;
  for (auto& g : b3) sizes.push_back(g.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 3, 3, 1}));
}

TEST(ExteriorBasis, RejectsOutOfRange) {
  EXPECT_THROW(exteriorBasis(0), Error);
  EXPECT_THROW(exteriorBasis(17), Error);
  EXPECT_NO_THROW(exteriorBasis(16));
}

TEST(ExteriorBasis, CountsOrderAndPositions) {
  for (int kappa = 1; kappa <= 10; ++kappa) {
    auto b = exteriorBasis(kappa);
    std::size_t total = 0;
    for (int j = 0; j <= kappa; ++j) {
      EXPECT_EQ(static_cast<long long>(b[j].size()), binom(kappa, j));
      total += b[j].size();
      for (std::size_t p = 0; p < b[j].size(); ++p) {
        const auto& m = b[j][p].members;
        EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
        EXPECT_TRUE(std::adjacent_find(m.begin(), m.end()) == m.end());
        if (p > 0) EXPECT_TRUE(std::lexicographical_compare(b[j][p - 1].members.begin(), b[j][p - 1].members.end(),
                                                             m.begin(), m.end()));
        EXPECT_EQ(exteriorPosition(b[j][p].mask(), kappa), static_cast<int>(p));
      }
    }
    EXPECT_EQ(total, std::size_t(1) << kappa);
  }
}

TEST(BuildD, ScalarKappaOne) {
  Mat X(1, 1);
  X << 2.0;
  auto d = buildD(tupleOf({X}), zeroCoForm(1));
  ASSERT_EQ(d.blocks.size(), 1u);
  EXPECT_EQ(d.blocks[0](0, 0), cd(2.0));
}

TEST(BuildD, ZeroTupleShiftedByLambda) {
  const int n = 3;
  CoForm l(2);
  l << 1.0, cd(0, 1);
  auto d = buildD(tupleOf({Mat::Zero(n, n), Mat::Zero(n, n)}), l);
  Mat expected(2 * n, n);
  expected << Mat::Identity(n, n), cd(0, 1) * Mat::Identity(n, n);
  EXPECT_LT((d.blocks[0] - expected).norm(), 1e-15);
  // grade 1 -> 2: e_1 -> e_2 ^ e_1 = -e_12 (coefficient i), e_2 -> e_1 ^ e_2 = +e_12.
  Mat e1(n, 2 * n);
  e1 << -cd(0, 1) * Mat::Identity(n, n), Mat::Identity(n, n);
  EXPECT_LT((d.blocks[1] - e1).norm(), 1e-15);
}

TEST(BuildD, MatchesPermutationParityOracle) {
  std::mt19937_64 rng(11);
  for (int kappa = 1; kappa <= 4; ++kappa) {
    auto X = polynomialTuple(3, kappa, rng);
    CoForm l = CoForm::Random(kappa);
    auto d = buildD(tupleOf(X), l);
    auto o = oracleD(X, l);
    for (int j = 0; j < kappa; ++j) EXPECT_LT((d.blocks[j] - o[j]).norm(), 1e-13);
  }
}

TEST(BuildD, SquareVanishesForRandomCommutingPair) {
  std::mt19937_64 rng(7);
  auto X = polynomialTuple(4, 2, rng);
  auto t = tupleOf(X);
  auto d = buildD(t, CoForm::Random(2));
  EXPECT_LT((d.blocks[1] * d.blocks[0]).norm(), 1e-12 * t.scale());
}

TEST(BuildD, DimensionMismatch) {
  EXPECT_THROW(makeTuple({Mat::Zero(2, 2), Mat::Zero(3, 3)}), Error);
  auto t = tupleOf({Mat::Zero(2, 2)});
  EXPECT_THROW(buildD(t, zeroCoForm(2)), Error);
}

TEST(BuildDelta, KappaOne) {
  Mat X(2, 2);
  X << 1.0, 2.0, 0.0, 3.0;
  CoForm l(1);
  l << cd(0.5, -1);
  auto delta = buildDelta(tupleOf({X}), l);
  EXPECT_LT((delta.blocks[0] + (X + l[0] * Mat::Identity(2, 2))).norm(), 1e-15);
}

TEST(BuildDelta, KappaTwoTopGrade) {
  const int n = 2;
  std::mt19937_64 rng(3);
  auto X = polynomialTuple(n, 2, rng);
  CoForm l = CoForm::Random(2);
  auto delta = buildDelta(tupleOf(X), l);
  Vec u = Vec::Random(n);
  Vec out = delta.blocks[1] * u;  // grade 2 -> grade 1, basis e_1, e_2
  Vec X1u = (X[0] + l[0] * Mat::Identity(n, n)) * u;
  Vec X2u = (X[1] + l[1] * Mat::Identity(n, n)) * u;
  EXPECT_LT((out.head(n) - X2u).norm(), 1e-13);   // coefficient of e_1
  EXPECT_LT((out.tail(n) + X1u).norm(), 1e-13);   // coefficient of e_2
}

TEST(BuildDelta, SquareVanishes) {
  std::mt19937_64 rng(5);
  for (int kappa = 2; kappa <= 4; ++kappa) {
    auto t = tupleOf(polynomialTuple(3, kappa, rng));
    EXPECT_LT(squareDefect(buildDelta(t, CoForm::Random(kappa))), 1e-12 * t.scale());
  }
}

TEST(Contraction, Examples) {
  RVec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  auto i1 = contraction(e1, 2), i2 = contraction(e2, 2);
  // grade 2 -> 1 with basis (e_1, e_2).
  EXPECT_EQ(i1.blocks[1](0, 0), cd(0));
  EXPECT_EQ(i1.blocks[1](1, 0), cd(1));
  EXPECT_EQ(i2.blocks[1](0, 0), cd(-1));
  EXPECT_EQ(i2.blocks[1](1, 0), cd(0));
  // grade 1 -> 0: iota_A e_k = A_k; nothing acts on grade 0.
  EXPECT_EQ(i1.blocks[0](0, 0), cd(1));
  EXPECT_EQ(i1.blocks[0](0, 1), cd(0));
}

TEST(Contraction, SquaresToZeroAndAntiderivation) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int kappa = 1; kappa <= 5; ++kappa) {
    RVec A(kappa), B(kappa);
    for (int i = 0; i < kappa; ++i) {
      A[i] = g(rng);
      B[i] = g(rng);
    }
    auto iA = contraction(A, kappa);
    EXPECT_LT(squareDefect(iA), 1e-14);
    // iota_A iota_B + iota_B iota_A = 0 on every grade.
    auto iB = contraction(B, kappa);
    for (int j = 0; j + 1 < kappa; ++j)
      EXPECT_LT((iA.blocks[j] * iB.blocks[j + 1] + iB.blocks[j] * iA.blocks[j + 1]).norm(), 1e-14);
  }
}

TEST(Homotopy, IotaIdentity) {
  std::mt19937_64 rng(21);
  for (int kappa = 1; kappa <= 3; ++kappa) {
    auto t = tupleOf(polynomialTuple(4, kappa, rng));
    for (int a = 0; a < kappa; ++a) {
      RVec A = RVec::Unit(kappa, a);
      EXPECT_LT(iotaHomotopyDefect(t, A), 1e-12 * t.scale());
    }
  }
}

TEST(Homotopy, DiagonalSelfPairGivesMinusSumOfSquares) {
  Mat X1 = Vec::Random(3).asDiagonal(), X2 = Vec::Random(3).asDiagonal();
  auto t = tupleOf({X1, X2});
  EXPECT_LT(homotopyDefect(t, t, zeroCoForm(2)), 1e-14);
  auto d = buildD(t, zeroCoForm(2));
  auto delta = buildDelta(t, zeroCoForm(2));
  const Mat S = X1 * X1 + X2 * X2;
  // Grade 1 Laplacian equals -S on both components.
  Mat H = delta.blocks[1] * d.blocks[1] + d.blocks[0] * delta.blocks[0];
  Mat expected = Mat::Zero(6, 6);
  expected.block(0, 0, 3, 3) = -S;
  expected.block(3, 3, 3, 3) = -S;
  EXPECT_LT((H - expected).norm(), 1e-14);
}

TEST(Homotopy, ZeroTuple) {
  std::mt19937_64 rng(2);
  auto Y = tupleOf(polynomialTuple(3, 2, rng));
  auto X = tupleOf({Mat::Zero(3, 3), Mat::Zero(3, 3)});
  EXPECT_EQ(homotopyDefect(X, Y, zeroCoForm(2)), 0.0);
}

TEST(Homotopy, RandomCommutingPairs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::normal_distribution<double> g;
    Mat A = rt::tuples::gaussianMatrix(3, rng, 0.5);
    auto poly = [&](void) {
      Mat S = Mat::Zero(3, 3), P = Mat::Identity(3, 3);
      for (int p = 0; p < 3; ++p) {
        S += cd(g(rng), g(rng)) * P;
        P = P * A;
      }
      return S;
    };
    auto X = tupleOf({poly(), poly()});
    auto Y = tupleOf({poly(), poly()});
    EXPECT_LT(homotopyDefect(X, Y, CoForm::Random(2)), 1e-10 * std::max(X.scale(), Y.scale()) * Y.scale());
  }
}

TEST(Homotopy, RejectsNonCommutingPairWithDiagnostic) {
  Mat a(2, 2), b(2, 2);
  a << 0, 1, 0, 0;
  b << 0, 0, 1, 0;
  auto X = tupleOf({a, Mat::Zero(2, 2)});
  auto Y = tupleOf({Mat::Zero(2, 2), b});
  try {
    homotopyDefect(X, Y, zeroCoForm(2));
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(X_1, Y_2)"), std::string::npos) << e.what();
  }
}

TEST(Cohomology, ZeroDifferential) {
  const int n = 4;
  auto d = buildD(tupleOf({Mat::Zero(n, n), Mat::Zero(n, n)}), zeroCoForm(2));
  auto r = cohomologyDims(d);
  EXPECT_EQ(r.dims, (std::vector<int>{n, 2 * n, n}));
  EXPECT_EQ(fredholmIndex(r.dims), 0);
}

TEST(Cohomology, SymmetricTupleCount) {
  std::mt19937_64 rng(31);
  for (int kappa = 1; kappa <= 3; ++kappa)
    for (int m = 1; m <= 3; ++m) {
      std::vector<std::vector<double>> pts;
      auto t = tupleOf(symmetricTuple(3, m, kappa, rng, &pts));
      CoForm l(kappa);
      for (int j = 0; j < kappa; ++j) l[j] = -pts[0][j];
      auto r = cohomologyDims(buildD(t, l));
      for (int j = 0; j <= kappa; ++j) EXPECT_EQ(r.dims[j], m * binom(kappa, j));
      EXPECT_EQ(fredholmIndex(r.dims), 0);
    }
}

TEST(Cohomology, NonEigenvalueIsExact) {
  std::mt19937_64 rng(41);
  auto t = tupleOf(jordanTuple({2, 1}, 2, rng));
  CoForm l(2);
  l << cd(0.25, 0.1), cd(-0.3, 0.2);  // off the half-integer grid
  auto r = cohomologyDims(buildD(t, l));
  EXPECT_EQ(r.dims, (std::vector<int>{0, 0, 0}));
}

TEST(Cohomology, FredholmIndexExamples) {
  EXPECT_EQ(fredholmIndex({3, 6, 3}), 0);
  EXPECT_EQ(fredholmIndex({0, 0, 0}), 0);
  EXPECT_EQ(fredholmIndex({1, 3, 3, 1}), 0);
}

TEST(Cohomology, IllConditionedGapIsFlagged) {
  Mat X = Mat::Zero(2, 2);
  X(0, 0) = 1.0;
  X(1, 1) = 3e-8;  // within a factor 10 of the cutoff 1e-8 * 1
  auto r = cohomologyDims(buildD(tupleOf({X}), zeroCoForm(1)), 1e-8);
  EXPECT_TRUE(r.illConditioned);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.dims.size(), 2u);
}

// Property: unitary invariance and index zero on many tuples and lambdas.
TEST(CohomologyProperty, UnitaryInvarianceAndIndex) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int kappa = 1 + trial % 3;
    auto X = jordanTuple({2, 1, 1}, kappa, rng);
    auto oracle = rt::tuples::bruteForceJointEigenvalues(X);
    CoForm l = -oracle[trial % oracle.size()].lambda;
    Mat U = rt::tuples::randomUnitary(4, rng);
    std::vector<Mat> Y;
    for (auto& x : X) Y.push_back(U * x * U.adjoint());
    auto a = cohomologyDims(buildD(tupleOf(X), l), 1e-8);
    auto b = cohomologyDims(buildD(tupleOf(Y), l), 1e-8);
    EXPECT_EQ(a.dims, b.dims);
    EXPECT_EQ(fredholmIndex(a.dims), 0);
    EXPECT_GT(a.dims[0], 0);
  }
}

// Sandwiching: cohomology of the full complex equals that of the complex
// restricted to the generalised weight space.
TEST(CohomologyProperty, WeightSpaceRestriction) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 15; ++trial) {
    const int kappa = 2;
    auto X = jordanTuple({2, 2, 1}, kappa, rng);
    auto t = tupleOf(X);
    for (const auto& ev : rt::tuples::bruteForceJointEigenvalues(X)) {
      Mat W = weightSpace(t, ev.lambda);
      ASSERT_EQ(W.cols(), ev.algMult);
      Mat Wp = W.completeOrthogonalDecomposition().pseudoInverse();
      std::vector<Mat> R;
      for (auto& x : X) R.push_back(Wp * x * W);
      auto d = buildD(t, -ev.lambda);
      auto full = cohomologyDims(d, 1e-8);
      double smax = 0.0;
      for (const auto& B : d.blocks) smax = std::max(smax, B.operatorNorm());
      // Same absolute cutoff as the full complex.
      auto restricted = cohomologyDims(buildD(makeTuple(R, 1e-6), -ev.lambda), 1e-8, 1e-8 * smax);
      EXPECT_EQ(full.dims, restricted.dims);
    }
  }
}

TEST(SignsTable, ContainsWedgeAndContractionLines) {
  auto s = signsTable(2);
  EXPECT_NE(s.find("e2 ^ e1 = -e1^e2"), std::string::npos) << s;
  EXPECT_NE(s.find("e1 ^ e2 = +e1^e2"), std::string::npos) << s;
  EXPECT_NE(s.find("iota_e2 e1^e2 = -e1"), std::string::npos) << s;
}
