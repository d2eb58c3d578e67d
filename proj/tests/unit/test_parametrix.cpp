#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "rt/jointspec.hpp"
#include "rt/parametrix.hpp"
#include "rt/tuples.hpp"

using namespace rt;

namespace {

// Composite trapezoid over the support; spectrally accurate for a smooth bump.
template <class F>
cd trapezoid(const CutoffProfile& p, F&& f, int m = 20000) {
  const double h = (p.hi() - p.lo()) / m;
  cd s = 0.0;
  for (int i = 1; i < m; ++i) {
    const double t = p.lo() + i * h;
    s += f(t) * p(t);
  }
  return s * h;
}

std::vector<CutoffProfile> defaultProfiles(int kappa) {
  return std::vector<CutoffProfile>(kappa, makeProfile());
}

}  // namespace

TEST(CutoffProfile, NormalisationSupportPositivity) {
  for (auto fam : {ProfileFamily::Bump, ProfileFamily::SkewBump}) {
    auto p = makeProfile(fam, 1.3, 0.8);
    EXPECT_NEAR(std::abs(trapezoid(p, [](double) { return cd(1.0); })), 1.0, 1e-10);
    EXPECT_EQ(p(p.lo() - 1e-3), 0.0);
    EXPECT_EQ(p(p.hi() + 1e-3), 0.0);
    for (int i = 0; i <= 1000; ++i) EXPECT_GE(p(p.lo() + i * 0.8 / 1000), 0.0);
  }
  auto even = makeProfile(ProfileFamily::Bump, 1.0, 1.0);
  EXPECT_LT(std::abs(integrateProfile(even, [](double t) { return cd(t - 1.0); })), 1e-12);
  auto skew = makeProfile(ProfileFamily::SkewBump, 1.0, 1.0);
  EXPECT_GT(std::abs(integrateProfile(skew, [](double t) { return cd(t - 1.0); })), 1e-3);
}

TEST(CutoffProfile, RejectsBadSupport) {
  EXPECT_THROW(makeProfile(ProfileFamily::Bump, 0.4, 1.0), Error);
  EXPECT_THROW(makeProfile(ProfileFamily::Bump, 1.0, 0.0), Error);
  EXPECT_THROW(parseProfileFamily("gaussian"), Error);
  EXPECT_EQ(parseProfileFamily("skew-bump"), ProfileFamily::SkewBump);
}

TEST(PsiHat, UnitAtZeroAndMatchesTrapezoid) {
  auto p = makeProfile(ProfileFamily::SkewBump, 1.2, 0.9);
  EXPECT_NEAR(std::abs(psiHat(p, 0.0) - 1.0), 0.0, 1e-13);
  for (cd s : {cd(0.7), cd(-3.1), cd(12.0), cd(2.0, -1.5), cd(-4.0, 0.8)}) {
    const cd oracle = trapezoid(p, [&](double t) { return std::exp(-cd(0, 1) * s * t); });
    EXPECT_LT(std::abs(psiHat(p, s) - oracle), 1e-9);
  }
}

TEST(PsiHat, RationalDecayBound) {
  auto p = makeProfile();
  // Fit c0 on a coarse grid, verify on a finer one.
  double c0 = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    const double s = 0.5 * i;
    c0 = std::min(c0, (1.0 / std::abs(psiHat(p, s)) - 1.0) / (s * s));
  }
  ASSERT_GT(c0, 0.0);
  for (int i = 1; i <= 997; ++i) {
    const double s = 0.0503 * i;
    EXPECT_LE(std::abs(psiHat(p, s)), 1.0 / (1.0 + 0.99 * c0 * s * s)) << "s = " << s;
  }
}

TEST(PsiHat, EvenFamilyQuadraticExponent) {
  auto p = makeProfile(ProfileFamily::Bump, 1.0, 1.0);
  // |psi^(s)| = e^{-S(s)}, S = a s^2 + O(s^4), a = variance / 2.
  const double var = trapezoid(p, [](double t) { return cd((t - 1.0) * (t - 1.0)); }).real();
  const double h = 1e-2;
  const double S1 = -std::log(std::abs(psiHat(p, h))), S2 = -std::log(std::abs(psiHat(p, 2 * h)));
  const double a = (16.0 * S1 - S2) / (12.0 * h * h);  // Richardson on the s^4 term
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, 0.5 * var, 1e-6);
  // Even profile: e^{i s sigma} psi^(s) is real.
  for (double s : {0.3, 2.0, 7.5}) EXPECT_LT(std::abs((std::exp(cd(0, s)) * psiHat(p, s)).imag()), 1e-12);
}

TEST(ChiLaplace, MatchesDefinition) {
  auto p = makeProfile(ProfileFamily::SkewBump, 1.0, 1.0);
  for (cd z : {cd(0.5, 1.0), cd(-0.3, 2.0), cd(2.0, 0.0)}) {
    const cd oracle = trapezoid(p, [&](double t) { return (1.0 - std::exp(-t * z)) / z; });
    EXPECT_LT(std::abs(chiLaplace(p, z) - oracle), 1e-9);
  }
  const cd mean = trapezoid(p, [](double t) { return cd(t); });
  EXPECT_LT(std::abs(chiLaplace(p, 0.0) - mean), 1e-10);  // first moment of psi at z = 0
}

TEST(BuildR, ZeroTupleIsIdentity) {
  auto t = makeTuple({Mat::Zero(3, 3), Mat::Zero(3, 3)});
  auto R = buildR(t, zeroCoForm(2), defaultProfiles(2));
  EXPECT_LT((R.R - Mat::Identity(3, 3)).norm(), 1e-13);
}

TEST(BuildR, DiagonalModeEigenvalue) {
  Mat X1 = Mat::Zero(2, 2), X2 = Mat::Zero(2, 2);
  X1(0, 0) = cd(0.0, 2.0 * M_PI);
  X2(0, 0) = cd(0.1, -1.0);
  X1(1, 1) = cd(0.3, 0.0);
  auto t = makeTuple({X1, X2});
  CoForm l(2);
  l << cd(0.0, 0.5), cd(-0.05, 0.0);
  std::vector<CutoffProfile> prof{makeProfile(ProfileFamily::Bump, 1.0, 1.0),
                                  makeProfile(ProfileFamily::SkewBump, 0.8, 0.6)};
  auto R = buildR(t, l, prof);
  for (int m = 0; m < 2; ++m) {
    cd expected = 1.0;
    const std::vector<Mat>& X = t.mats;
    for (int j = 0; j < 2; ++j) {
      const cd z = X[j](m, m) + l[j];
      expected *= trapezoid(prof[j], [&](double s) { return std::exp(-s * z); });
    }
    EXPECT_LT(std::abs(R.R(m, m) - expected), 1e-10);
  }
}

TEST(BuildR, ContractingMode) {
  Mat X = Mat::Zero(1, 1);
  X(0, 0) = cd(0.4, 3.0);
  auto R = buildR(makeTuple({X}), zeroCoForm(1), defaultProfiles(1));
  EXPECT_LT(std::abs(R.R(0, 0)), 1.0);
}

TEST(BuildR, DefectiveGeneratorUsesQuadrature) {
  Mat X(2, 2);
  X << cd(0.2, 1.0), 1.0, 0.0, cd(0.2, 1.0);
  auto p = makeProfile(ProfileFamily::SkewBump, 1.0, 1.0);
  CoForm l(1);
  l << cd(0.1, -0.3);
  auto R = buildR(makeTuple({X}), l, {p});
  EXPECT_FALSE(R.eigendecomposed);
  EXPECT_GE(R.quadratureNodes, 64);
  const cd a = X(0, 0) + l[0];
  // e^{-tX} = e^{-ta}(I - tN).
  const cd diag = trapezoid(p, [&](double t) { return std::exp(-t * a); });
  const cd off = trapezoid(p, [&](double t) { return -t * std::exp(-t * a); });
  EXPECT_LT(std::abs(R.R(0, 0) - diag), 1e-10);
  EXPECT_LT(std::abs(R.R(1, 1) - diag), 1e-10);
  EXPECT_LT(std::abs(R.R(0, 1) - off), 1e-10);
  EXPECT_LT(std::abs(R.R(1, 0)), 1e-14);
}

TEST(BuildF, ZeroTupleAndRankOne) {
  auto z = makeTuple({Mat::Zero(2, 2), Mat::Zero(2, 2)});
  EXPECT_LT(buildF(z, zeroCoForm(2), defaultProfiles(2)).F.norm(), 1e-13);

  std::mt19937_64 rng(3);
  auto X = makeTuple(rt::tuples::jordanTuple({1, 1, 1}, 1, rng));
  CoForm l(1);
  l << cd(0.2, 0.1);
  auto F = buildF(X, l, defaultProfiles(1));
  auto R = buildR(X, l, defaultProfiles(1));
  EXPECT_LT((F.F - (Mat::Identity(3, 3) - R.R)).norm(), 1e-12);
}

TEST(BuildF, HomotopyWitness) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const int kappa = 2 + trial % 2;
    auto X = rt::tuples::jordanTuple({1, 1, 1, 1}, kappa, rng);
    for (auto& x : X) x *= 0.5;
    auto t = makeTuple(X);
    CoForm l = CoForm::Random(kappa) * 0.3;
    auto F = buildF(t, l, defaultProfiles(kappa));
    EXPECT_LT(F.homotopyDefect, 1e-8) << "trial " << trial;
  }
  // Defective generators go through the quadrature path.
  auto J = rt::tuples::jordanTuple({2, 1}, 2, rng, false);
  auto Fd = buildF(makeTuple(J), CoForm::Constant(2, 0.1), defaultProfiles(2));
  EXPECT_LT(Fd.homotopyDefect, 1e-8);
}

namespace {

// Volume-preserving diagonal generators: purely imaginary spectra.
CommutingTuple imaginaryDiagonal(int n, int kappa, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-3, 3);
  std::vector<Mat> X;
  for (int j = 0; j < kappa; ++j) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = cd(0.0, 2.0 * M_PI * k(rng));
    X.push_back(d.asDiagonal());
  }
  Mat V = rt::tuples::randomUnitary(n, rng);
  for (auto& x : X) x = V * x * V.adjoint();
  return makeTuple(X, 1e-10);
}

}  // namespace

TEST(RProperty, CommutesWithGeneratorsAndBoundedPowers) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = imaginaryDiagonal(5, 2, rng);
    CoForm l(2);
    l << cd(0, 2 * M_PI), cd(0, -2 * M_PI);
    auto R = buildR(t, l, defaultProfiles(2));
    for (const auto& x : t.mats) EXPECT_LT((R.R * x - x * R.R).norm(), 1e-9 * t.scale());
    EXPECT_LE(R.R.operatorNorm(), 1.0 + 1e-10);
    Mat P = R.R;
    for (int k = 0; k < 12; ++k) P = P * P;  // R^4096
    EXPECT_LE(P.operatorNorm(), 1.0 + 1e-8);
  }
}

TEST(RProperty, PowerProjectorIsJointKernel) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = imaginaryDiagonal(6, 2, rng);
    auto js = jointEigenvalues(t);
    const CoForm l = -js.eigenvalues[0].lambda;  // purely imaginary
    auto R = buildR(t, l, defaultProfiles(2));
    auto Pi = projectorPower(R.R);
    for (int j = 0; j < 2; ++j) {
      Mat K = t.mats[j] + l[j] * Mat::Identity(6, 6);
      EXPECT_LT((K * Pi.P).norm(), 1e-8);
    }
    EXPECT_EQ(Pi.rank, js.eigenvalues[0].geomMult);
  }
}

TEST(RProperty, FixesConstantsWhenGeneratorsAnnihilateThem) {
  // Generators with X 1 = 0: rows sum to zero.
  Mat X(3, 3);
  X << -1, 1, 0, 0, -2, 2, 1, 0, -1;
  auto R = buildR(makeTuple({X}), zeroCoForm(1), defaultProfiles(1));
  Vec one = Vec::Ones(3);
  EXPECT_LT((R.R * one - one).norm(), 1e-12);
}

TEST(ModulusOne, OnlyEigenvalueOneOnThePeripheralCircle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = imaginaryDiagonal(4, 2, rng);
    auto js = jointEigenvalues(t);
    CoForm l = -js.eigenvalues[trial % js.eigenvalues.size()].lambda;
    auto R = buildR(t, l, defaultProfiles(2));
    auto res = modulusOneTest(R, t);
    EXPECT_TRUE(res.hasPeripheral);
    EXPECT_TRUE(res.atOne);
    EXPECT_FALSE(res.inconsistent) << res.diagnostic;
    for (cd tau : res.peripheral) EXPECT_LT(std::abs(tau - 1.0), 1e-8);
  }
}

TEST(ModulusOne, InjectedPeripheralFlaggedInconsistent) {
  auto t = makeTuple({Mat::Zero(2, 2)});
  AveragedOperator fake;
  fake.R = Mat::Identity(2, 2);
  fake.R(1, 1) = -1.0;
  fake.lambda = zeroCoForm(1);
  auto res = modulusOneTest(fake, t);
  EXPECT_TRUE(res.inconsistent);
  EXPECT_FALSE(res.atOne);
}

TEST(ResonanceDetect, FindsJointEigenvaluesOfGenerators) {
  Mat X1 = Vec::LinSpaced(3, 0.0, 1.0).asDiagonal().toDenseMatrix() * cd(0.0, 1.0);
  Mat X2 = Mat::Zero(3, 3);
  X2.diagonal() << cd(-0.2, 0.0), cd(0.0, 0.0), cd(0.1, 0.5);
  auto t = makeTuple({X1, X2});
  auto fam = generatorFamily(t, defaultProfiles(2));
  std::vector<CoForm> grid;
  for (double a = -1.0; a <= 0.01; a += 0.25)
    for (double b = -0.6; b <= 0.6; b += 0.3) {
      CoForm l(2);
      l << cd(0.0, a), cd(b, b);
      grid.push_back(l);
    }
  auto res = resonanceDetect(fam, grid);
  // Expected resonances: lambda = -(joint eigenvalue).
  ASSERT_EQ(res.size(), 3u);
  for (int m = 0; m < 3; ++m) {
    CoForm l(2);
    l << -X1(m, m), -X2(m, m);
    bool hit = false;
    for (const auto& r : res)
      if ((r.lambda - l).cwiseAbs().maxCoeff() < 1e-8) {
        hit = true;
        EXPECT_EQ(r.status, "confirmed");
      }
    EXPECT_TRUE(hit) << "missing " << m;
  }
}

TEST(ResonanceDetect, ClassifyStatuses) {
  Mat X = Mat::Zero(1, 1);
  auto t = makeTuple({X});
  auto fam = generatorFamily(t, defaultProfiles(1));
  DetectOptions o;
  EXPECT_EQ(classifyCandidate(fam, zeroCoForm(1), o).status, "confirmed");
  CoForm far(1);
  far << cd(0.0, 1.0);
  EXPECT_EQ(classifyCandidate(fam, far, o).status, "rejected");
  // Only the kernel detector fires when F is replaced by a regular matrix.
  auto broken = fam;
  broken.F = [](const CoForm&) { return Mat(Mat::Identity(1, 1)); };
  EXPECT_EQ(classifyCandidate(broken, zeroCoForm(1), o).status, "unconfirmed");
}
