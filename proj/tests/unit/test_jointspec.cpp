#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"
#include "rt/tuples.hpp"

using namespace rt;
using rt::tuples::bruteForceJointEigenvalues;
using rt::tuples::jordanTuple;

namespace {

const JointEigenvalue* find(const JointSpectrum& s, const CoForm& l, double tol) {
  for (const auto& e : s.eigenvalues)
    if ((e.lambda - l).cwiseAbs().maxCoeff() < tol) return &e;
  return nullptr;
}

Mat jordan(int n) {
  Mat N = Mat::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) N(i, i + 1) = 1.0;
  return N;
}

}  // namespace

TEST(JointEigenvalues, DiagonalPair) {
  Mat a = Vec::LinSpaced(2, 1, 2).asDiagonal(), b = Vec::LinSpaced(2, 3, 4).asDiagonal();
  auto s = jointEigenvalues(makeTuple({a, b}));
  ASSERT_EQ(s.eigenvalues.size(), 2u);
  CoForm l1(2), l2(2);
  l1 << 1, 3;
  l2 << 2, 4;
  ASSERT_NE(find(s, l1, 1e-12), nullptr);
  ASSERT_NE(find(s, l2, 1e-12), nullptr);
  for (const auto& e : s.eigenvalues) {
    EXPECT_EQ(e.algMult, 1);
    EXPECT_EQ(e.geomMult, 1);
    EXPECT_EQ(e.jordanOrder, 1);
  }
}

TEST(JointEigenvalues, SharedJordanBlock) {
  auto t = makeTuple({jordan(2), Mat::Zero(2, 2)});
  auto s = jointEigenvalues(t);
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  const auto& e = s.eigenvalues[0];
  EXPECT_LT(e.lambda.cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_EQ(e.algMult, 2);
  EXPECT_EQ(e.geomMult, 1);
  EXPECT_EQ(e.jordanOrder, 2);
  EXPECT_EQ(weightSpace(t, zeroCoForm(2)).cols(), 2);
}

TEST(JointEigenvalues, PolynomialPairMatchesSingleMatrixOracle) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g;
  const int n = 6;
  Mat A = rt::tuples::gaussianMatrix(n, rng, 1.0 / std::sqrt(6.0));
  Vec p(3), q(3);
  for (int i = 0; i < 3; ++i) {
    p[i] = cd(g(rng), g(rng));
    q[i] = cd(g(rng), g(rng));
  }
  auto ev = [&](const Vec& c, const Mat& M) {
    return Mat(c[0] * Mat::Identity(n, n) + c[1] * M + c[2] * M * M);
  };
  auto t = makeTuple({ev(p, A), ev(q, A)});
  auto s = jointEigenvalues(t);
  Eigen::ComplexEigenSolver<Mat> es(A);
  ASSERT_EQ(s.eigenvalues.size(), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const cd mu = es.eigenvalues()[i];
    CoForm l(2);
    l << p[0] + p[1] * mu + p[2] * mu * mu, q[0] + q[1] * mu + q[2] * mu * mu;
    const auto* e = find(s, l, 1e-8);
    ASSERT_NE(e, nullptr) << "missing joint eigenvalue " << i;
    EXPECT_EQ(e->algMult, 1);
    // Weight space equals the eigenvector of A.
    Mat W = weightSpace(t, l);
    ASSERT_EQ(W.cols(), 1);
    Vec v = es.eigenvectors().col(i).normalized();
    EXPECT_NEAR(std::abs(W.col(0).dot(v)), 1.0, 1e-8);
  }
}

TEST(JordanOrder, NilpotentLadder) {
  Mat N = jordan(3);
  auto t = makeTuple({N, N * N});
  EXPECT_EQ(jordanOrder(t, zeroCoForm(2)), 3);
  Mat D = Vec::LinSpaced(3, 1, 3).asDiagonal();
  auto td = makeTuple({D, D * D});
  CoForm l(2);
  l << 2, 4;
  EXPECT_EQ(jordanOrder(td, l), 1);
  CoForm off(2);
  off << 10, 10;
  EXPECT_EQ(jordanOrder(td, off), 0);
  EXPECT_EQ(weightSpace(td, off).cols(), 0);
}

TEST(JointEigenvaluesProperty, MatchesBruteForceOracle) {
  std::mt19937_64 rng(777);
  const std::vector<std::vector<int>> shapes{{1, 1, 1}, {2, 1}, {2, 2}, {3, 1, 1}, {1, 1, 1, 1, 2}, {2, 2, 1, 1, 1}};
  for (int trial = 0; trial < 40; ++trial) {
    const int kappa = 1 + trial % 3;
    auto X = jordanTuple(shapes[trial % shapes.size()], kappa, rng);
    auto t = makeTuple(X);
    auto s = jointEigenvalues(t);
    auto o = bruteForceJointEigenvalues(X);
    int total = 0;
    for (const auto& e : s.eigenvalues) total += e.algMult;
    EXPECT_EQ(total, t.dim);
    ASSERT_EQ(s.eigenvalues.size(), o.size()) << "trial " << trial;
    for (const auto& oe : o) {
      const auto* e = find(s, oe.lambda, 1e-5);
      ASSERT_NE(e, nullptr);
      EXPECT_EQ(e->algMult, oe.algMult);
      EXPECT_EQ(e->geomMult, oe.geomMult);
      EXPECT_GE(e->jordanOrder, 1);
      EXPECT_LE(e->geomMult, e->algMult);
      EXPECT_LE(e->residual, 1e-7 * t.scale());
    }
  }
}

// The Koszul complex is non-exact exactly at the joint eigenvalues.
TEST(JointEigenvaluesProperty, AgreesWithCohomologyScan) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 10; ++trial) {
    const int kappa = 1 + trial % 2;
    auto X = jordanTuple({2, 1, 1}, kappa, rng, /*conjugate=*/true);
    auto t = makeTuple(X);
    auto s = jointEigenvalues(t);
    // Grid over the half-integer lattice where all coordinates live, plus off-grid points.
    std::vector<double> re{-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 0.3};
    std::vector<double> im{-1, -0.5, 0, 0.5, 1};
    int found = 0;
    std::vector<int> idx(kappa, 0);
    const int per = static_cast<int>(re.size() * im.size());
    for (int flat = 0; flat < (kappa == 1 ? per : per * per); ++flat) {
      CoForm l(kappa);
      int f = flat;
      for (int j = 0; j < kappa; ++j) {
        const int c = f % per;
        f /= per;
        l[j] = cd(re[c % re.size()], im[c / re.size()]);
      }
      auto h = cohomologyDims(buildD(t, -l), 1e-8);
      const bool nonExact = std::any_of(h.dims.begin(), h.dims.end(), [](int v) { return v > 0; });
      const auto* e = find(s, l, 1e-6);
      EXPECT_EQ(nonExact, e != nullptr);
      if (e) {
        ++found;
        EXPECT_EQ(h.dims[0], e->geomMult);
      }
    }
    EXPECT_GT(found, 0);
  }
}

TEST(JointEigenvaluesProperty, SymmetricCohomologyCount) {
  std::mt19937_64 rng(99);
  for (int kappa = 1; kappa <= 3; ++kappa) {
    auto X = rt::tuples::symmetricTuple(3, 2, kappa, rng);
    auto t = makeTuple(X);
    for (const auto& e : jointEigenvalues(t).eigenvalues) {
      auto h = cohomologyDims(buildD(t, -e.lambda));
      for (int j = 0; j <= kappa; ++j) EXPECT_EQ(h.dims[j], e.geomMult * binom(kappa, j));
    }
  }
}

TEST(JointEigenvalues, SeedIndependentSet) {
  std::mt19937_64 rng(8);
  auto t = makeTuple(jordanTuple({2, 1, 1}, 2, rng));
  auto a = jointEigenvalues(t, {1e-7, 1e-7, 1});
  auto b = jointEigenvalues(t, {1e-7, 1e-7, 2});
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  for (const auto& e : a.eigenvalues) EXPECT_NE(find(b, e.lambda, 1e-6), nullptr);
}

TEST(ProjectorContour, DiagonalExample) {
  Mat F = Mat::Zero(2, 2);
  F(1, 1) = 0.5;
  auto P = projectorContour(F, 0.1);
  Mat expected = Mat::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_LT((P.P - expected).norm(), 1e-12);
  EXPECT_EQ(P.rank, 1);
}

TEST(ProjectorContour, JordanBlockAtZero) {
  Mat F = Mat::Zero(3, 3);
  F(0, 1) = 1.0;
  F(2, 2) = 0.7;
  auto P = projectorContour(F, 0.2);
  EXPECT_EQ(P.rank, 2);
  EXPECT_LT((P.P * P.P - P.P).norm(), 1e-10);
}

TEST(ProjectorContour, MatchesInvariantSubspaceOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6;
    Mat V = rt::tuples::randomSimilarity(n, rng);
    Vec d(n);
    d << 0.01 * cd(1, 1), -0.02, 0.6, cd(0.3, 0.8), -0.9, cd(0, -0.5);
    Mat F = V * d.asDiagonal() * V.inverse();
    auto P = projectorContour(F, 0.1);
    Vec e = Vec::Zero(n);
    e[0] = e[1] = 1.0;
    Mat oracle = V * e.asDiagonal() * V.inverse();
    EXPECT_LT((P.P - oracle).norm(), 1e-10 * oracle.norm());
    EXPECT_LT((P.P * F - F * P.P).norm(), 1e-8);
  }
}

TEST(ProjectorContour, RejectsEigenvalueNearCircle) {
  Mat F = Mat::Zero(2, 2);
  F(1, 1) = 0.1 + 0.005;
  EXPECT_THROW(projectorContour(F, 0.1), Error);
}

TEST(ProjectorPower, Examples) {
  Mat R = Mat::Zero(2, 2);
  R(0, 0) = 1.0;
  R(1, 1) = 0.3;
  auto P = projectorPower(R);
  Mat expected = Mat::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_LT((P.P - expected).norm(), 1e-12);
  EXPECT_NEAR(P.rate, 0.3, 1e-6);

  R(1, 1) = -1.0;
  try {
    projectorPower(R);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("peripheral eigenvalue"), std::string::npos) << e.what();
  }
}

TEST(ProjectorPower, StochasticMatrixStationaryOracle) {
  RMat S(3, 3);
  S << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.2, 0.2, 0.6;  // row stochastic
  // Stationary pi solves pi^T S = pi^T; independent oracle by Gaussian elimination.
  RMat A = S.transpose() - RMat::Identity(3, 3);
  A.row(2).setOnes();
  RVec b = RVec::Zero(3);
  b[2] = 1.0;
  RVec pi = A.fullPivLu().solve(b);
  auto P = projectorPower(S.cast<cd>());
  EXPECT_EQ(P.rank, 1);
  Mat oracle = (RVec::Ones(3) * pi.transpose()).cast<cd>();
  EXPECT_LT((P.P - oracle).norm(), 1e-10);
}

TEST(ProjectorProperty, ContourAgreesWithPower) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5;
    Mat V = rt::tuples::randomSimilarity(n, rng);
    Vec d(n);
    d << 1.0, 1.0, 0.5, cd(0.2, -0.6), -0.4;
    Mat R = V * d.asDiagonal() * V.inverse();
    auto Pp = projectorPower(R);
    auto Pc = projectorContour(Mat::Identity(n, n) - R, 0.25);
    EXPECT_LT((Pp.P - Pc.P).norm(), 1e-8);
    EXPECT_LT((Pp.P * Pp.P - Pp.P).norm(), 1e-8 * Pp.P.norm());
  }
}

// Repeated eigenvalue 1 in a non-normal basis: squaring past roundoff level
// must not amplify the rounding error.
TEST(ProjectorProperty, RepeatedUnitEigenvalueNonNormal) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 7;
    Mat V = rt::tuples::randomSimilarity(n, rng);
    Vec d(n);
    d << 1.0, 1.0, 1.0, cd(0.3, 0.4), 0.41, -0.5, cd(0.0, -0.7);
    Mat R = V * d.asDiagonal() * V.inverse();
    auto Pp = projectorPower(R);
    auto Pc = projectorContour(Mat::Identity(n, n) - R, 0.25);
    EXPECT_EQ(Pp.rank, 3);
    EXPECT_LT((Pp.P - Pc.P).norm(), 1e-8) << trial;
  }
}
