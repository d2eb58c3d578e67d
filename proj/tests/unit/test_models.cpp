#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "rt/models.hpp"

using namespace rt;

namespace {

IMat mat2(long long a, long long b, long long c, long long d) {
  IMat M(2, 2);
  M << a, b, c, d;
  return M;
}

RVec vec(std::initializer_list<double> v) {
  RVec r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r[i++] = x;
  return r;
}

// Distance on the quotient: base mod 1, fibers compared after reduction.
double pointDistance(const ModelPoint& a, const ModelPoint& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.x.size(); ++i) {
    double t = std::abs(a.x[i] - b.x[i]);
    d = std::max(d, std::min(t, 1.0 - t));
  }
  return std::max(d, (a.s - b.s).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Models, ArnoldIsValid) {
  auto m = modelByName("arnold");
  EXPECT_EQ(m.kappa, 1);
  EXPECT_EQ(m.baseDim, 2);
  EXPECT_TRUE(m.volumePreserving);
  EXPECT_TRUE(m.constantRoofs());
  EXPECT_EQ(m.splitting.Eu.cols(), 1);
  EXPECT_EQ(m.splitting.Es.cols(), 1);
  EXPECT_TRUE(weylChamberTest(m, vec({1.0})));
  EXPECT_FALSE(weylChamberTest(m, vec({-1.0})));
}

TEST(Models, ParabolicMonodromyRejected) {
  EXPECT_THROW(catSuspension(mat2(1, 1, 0, 1), constantRoof(2)), Error);
  EXPECT_THROW(catSuspension(mat2(2, 0, 0, 1), constantRoof(2)), Error);  // det 2
}

TEST(Models, VariableRoofIsValid) {
  ModelParams p;
  p.epsilon = 0.1;
  auto m = modelByName("arnold", p);
  EXPECT_FALSE(m.constantRoofs());
  EXPECT_NEAR(m.roof(0).mean(), 1.0, 1e-15);
  EXPECT_NEAR(m.roof(0).gridMin(), 0.9, 1e-12);
  EXPECT_EQ(m.roof(0).modeCount(), 1);
  RVec x = vec({0.25, 0.7});
  EXPECT_NEAR(m.roof(0)(x), 1.0 + 0.1 * std::cos(2 * M_PI * 0.25), 1e-14);
}

TEST(Models, RoofLowerBoundEnforced) {
  ModelParams p;
  p.epsilon = 0.95;
  EXPECT_THROW(modelByName("arnold", p), Error);
}

TEST(Models, ProductChamber) {
  auto m = modelByName("arnold-product");
  EXPECT_EQ(m.kappa, 2);
  EXPECT_EQ(m.baseDim, 4);
  EXPECT_TRUE(weylChamberTest(m, vec({1.0, 1.0})));
  EXPECT_FALSE(weylChamberTest(m, vec({1.0, -1.0})));
  EXPECT_FALSE(weylChamberTest(m, vec({-1.0, 1.0})));
  EXPECT_TRUE(weylChamberTest(m, vec({0.2, 3.0})));
}

TEST(Models, CartanUnitsCommuteAndAreHyperbolic) {
  auto [M, N] = cartanUnits();
  EXPECT_EQ((M * N - N * M).cwiseAbs().maxCoeff(), 0);
  for (const IMat& X : {M, N}) {
    const RMat D = X.cast<double>();
    EXPECT_NEAR(std::abs(D.determinant()), 1.0, 1e-9);
    Eigen::EigenSolver<RMat> es(D);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GT(std::abs(std::log(std::abs(es.eigenvalues()[i]))), 1e-3);
  }
  // M^a N^b = Id only for a = b = 0 in a modest box.
  const IMat I = IMat::Identity(3, 3);
  auto power = [](IMat X, int e) {
    IMat R = IMat::Identity(3, 3);
    for (int i = 0; i < e; ++i) R = R * X;
    return R;
  };
  for (int a = 0; a <= 4; ++a)
    for (int b = -4; b <= 4; ++b) {
      if (a == 0 && b == 0) continue;
      if (a == 0 && b < 0) continue;
      // M^a N^b with b < 0 compared as M^a = N^{-b}.
      const IMat lhs = power(M, a) * (b >= 0 ? power(N, b) : I);
      const IMat rhs = b >= 0 ? I : power(N, -b);
      EXPECT_NE((lhs - rhs).cwiseAbs().maxCoeff(), 0) << a << "," << b;
    }
  auto m = cartanT3();
  EXPECT_EQ(m.kappa, 2);
  EXPECT_EQ(m.baseDim, 3);
  EXPECT_EQ(m.splitting.Eu.cols() + m.splitting.Es.cols(), 3);
}

TEST(Models, ChamberIsAConvexCone) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (const char* name : {"arnold-product", "cartan-t3"}) {
    auto m = modelByName(name);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      RVec a(m.kappa), b(m.kappa);
      for (auto& x : a) x = g(rng);
      for (auto& x : b) x = g(rng);
      if (!weylChamberTest(m, a) || !weylChamberTest(m, b)) continue;
      ++checked;
      const double t = std::uniform_real_distribution<double>(0, 1)(rng);
      EXPECT_TRUE(weylChamberTest(m, t * a + (1 - t) * b));
      EXPECT_TRUE(weylChamberTest(m, 3.7 * a));
    }
    EXPECT_GT(checked, 20) << name;
  }
}

TEST(Models, ChamberSamplerStaysInside) {
  auto m = cartanT3();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    RVec A = sampleChamberDirection(m, rng);
    EXPECT_NEAR(A.norm(), 1.0, 1e-12);
    EXPECT_TRUE(weylChamberTest(m, A));
  }
}

class FlowLaws : public ::testing::TestWithParam<std::pair<std::string, double>> {};

TEST_P(FlowLaws, GroupLawAndCommutativity) {
  const auto [name, eps] = GetParam();
  ModelParams p;
  p.epsilon = eps;
  auto m = modelByName(name, p);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    ModelPoint x = samplePoint(m, rng);
    RVec A(m.kappa), B(m.kappa);
    for (auto& v : A) v = g(rng);
    for (auto& v : B) v = g(rng);
    const double t = u(rng), s = u(rng);
    auto lhs = flow(m, A, t + s, x);
    auto rhs = flow(m, A, t, flow(m, A, s, x));
    EXPECT_LT(pointDistance(lhs, rhs), 1e-9);
    auto ab = flow(m, A, t, flow(m, B, s, x));
    auto ba = flow(m, B, s, flow(m, A, t, x));
    EXPECT_LT(pointDistance(ab, ba), 1e-9);
    auto back = flow(m, A, -t, flow(m, A, t, x));
    EXPECT_LT(pointDistance(back, x), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Models, FlowLaws,
                         ::testing::Values(std::make_pair(std::string("arnold"), 0.0),
                                           std::make_pair(std::string("arnold"), 0.1),
                                           std::make_pair(std::string("arnold-product"), 0.1),
                                           std::make_pair(std::string("cartan-t3"), 0.0)));

TEST(Models, UnitTimeReturnAppliesMonodromy) {
  auto m = modelByName("arnold");
  ModelPoint p{vec({0.3, 0.55}), vec({0.25})};
  auto q = flow(m, vec({1.0}), 1.0, p);
  EXPECT_NEAR(q.s[0], 0.25, 1e-14);
  RVec expect = m.monodromy(0).cast<double>() * p.x;
  for (Eigen::Index i = 0; i < 2; ++i) expect[i] -= std::floor(expect[i]);
  EXPECT_LT(pointDistance(q, ModelPoint{expect, q.s}), 1e-14);
  auto counts = returnCounts(m, vec({1.0}), 3.0, p);
  EXPECT_EQ(counts[0], 3);
  counts = returnCounts(m, vec({1.0}), -0.5, p);
  EXPECT_EQ(counts[0], -1);
}

// Tangent growth along A: observed signs agree with the chamber test.
TEST(Models, ChamberMatchesTangentDecay) {
  for (const char* name : {"arnold-product", "cartan-t3"}) {
    auto m = modelByName(name);
    std::mt19937_64 rng(19);
    std::normal_distribution<double> g;
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
      RVec A(m.kappa);
      for (auto& v : A) v = g(rng);
      A.normalize();
      ModelPoint x = samplePoint(m, rng);
      bool clear = true, expanding = true;
      // Dual functionals of the splitting: round-off leaks into faster
      // directions, so growth is read off the component along E itself.
      RMat basis(m.baseDim, m.baseDim);
      basis << m.splitting.Eu.topRows(m.baseDim), m.splitting.Es.topRows(m.baseDim);
      const RMat dual = basis.inverse();
      Eigen::Index row = 0;
      auto observe = [&](const RMat& E, const std::vector<RVec>& chi, bool wantPositive) {
        for (Eigen::Index c = 0; c < E.cols(); ++c, ++row) {
          const double predicted = chi[c].dot(A);
          if (std::abs(predicted) < 0.3) clear = false;
          RVec v = E.col(c);
          flowTangent(m, A, 20.0, x, v);
          const double rate = std::log(std::abs(dual.row(row).dot(v.head(m.baseDim)))) / 20.0;
          if (std::abs(predicted) >= 0.3) EXPECT_EQ(rate > 0, predicted > 0) << name;
          expanding = expanding && ((rate > 0) == wantPositive);
        }
      };
      observe(m.splitting.Eu, m.splitting.chiU, true);
      observe(m.splitting.Es, m.splitting.chiS, false);
      if (!clear) continue;
      ++compared;
      EXPECT_EQ(expanding, weylChamberTest(m, A)) << name;
    }
    EXPECT_GT(compared, 10) << name;
  }
}

TEST(Models, VolumePreservingHasZeroL2Growth) {
  for (const char* name : {"arnold", "arnold-product", "cartan-t3"}) {
    auto m = modelByName(name);
    auto e = cL2(m, m.chamber.A0);
    EXPECT_EQ(e.value, 0.0) << name;
  }
}

TEST(Models, UniformSamplerRespectsRoof) {
  ModelParams p;
  p.epsilon = 0.3;
  auto m = modelByName("arnold", p);
  std::mt19937_64 rng(2);
  double meanCos = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    auto q = samplePoint(m, rng);
    ASSERT_GE(q.s[0], 0.0);
    ASSERT_LT(q.s[0], m.roof(0)(q.x));
    meanCos += std::cos(2 * M_PI * q.x[0]);
  }
  // Base marginal has density r(x): E cos(2 pi x1) = eps / 2.
  EXPECT_NEAR(meanCos / n, 0.15, 4.0 / std::sqrt(double(n)));
}
