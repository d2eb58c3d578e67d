#include "rt/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"
#include "rt/parametrix.hpp"
#include "rt/tuples.hpp"

namespace rt {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void record(SuiteReport& r, double value, const std::string& label) {
  if (value > r.worst || r.worstCase.empty()) {
    r.worst = std::max(r.worst, value);
    r.worstCase = label;
  }
  if (!(value < r.threshold)) {
    ++r.failures;
    r.diagnostics.push_back(fmt::format("{}: {:.3e} >= {:.1e}", label, value, r.threshold));
  }
}

void fail(SuiteReport& r, std::string what) {
  ++r.failures;
  r.diagnostics.push_back(std::move(what));
}

// Y_j built from the X's, so every Y_j commutes with every X_k.
std::vector<Mat> commutant(const std::vector<Mat>& X, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Eigen::Index n = X.front().rows();
  double s = 1.0;
  for (const auto& x : X) s = std::max(s, x.norm());
  std::vector<Mat> Y;
  for (std::size_t j = 0; j < X.size(); ++j) {
    Mat y = cd(g(rng), g(rng)) * Mat::Identity(n, n);
    for (const auto& x : X) y += cd(g(rng), g(rng)) * x;
    y += cd(g(rng), g(rng)) / s * (X[j] * X.front());
    Y.push_back(y);
  }
  return Y;
}

CoForm randomCoForm(int kappa, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CoForm l(kappa);
  for (auto& x : l) x = cd(g(rng), g(rng));
  return l;
}

constexpr double kLoose = std::numeric_limits<double>::infinity();

}  // namespace

SuiteReport koszulIdentitySuite(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  SuiteReport r;
  r.name = "koszul-identities";
  r.threshold = 1e-10;
  const int cases = opts.cases > 0 ? opts.cases : 200;
  const int maxDim = opts.maxDim > 0 ? opts.maxDim : 12;
  const int maxKappa = std::clamp(opts.maxKappa, 1, kMaxKappa);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g;
  for (int c = 0; c < cases; ++c) {
    const int kappa = 1 + c % maxKappa;
    const int n = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::max(1, maxDim - 1)));
    std::vector<Mat> X;
    std::string family;
    switch (c % 3) {
      case 0:
        X = tuples::polynomialTuple(n, kappa, rng);
        family = "polynomial";
        break;
      case 1: {
        std::vector<int> blocks;
        for (int left = n; left > 0;) {
          const int b = std::min(left, 1 + static_cast<int>(rng() % 3));
          blocks.push_back(b);
          left -= b;
        }
        X = tuples::jordanTuple(blocks, kappa, rng);
        family = "jordan";
        break;
      }
      default: {
        const int m = 1 + static_cast<int>(rng() % 2);
        X = tuples::symmetricTuple(std::max(1, n / m), m, kappa, rng);
        family = "hermitian";
      }
    }
    auto Y = commutant(X, rng);
    if (opts.injectNonCommuting && c == 0) X.back() = tuples::gaussianMatrix(static_cast<int>(X.back().rows()), rng);
    const auto tx = makeTuple(X, kLoose);
    const auto ty = makeTuple(Y, kLoose);
    const CoForm l = randomCoForm(kappa, rng);
    RVec A(kappa);
    for (auto& a : A) a = g(rng);
    const std::string label = fmt::format("case {} ({}, n = {}, kappa = {})", c, family, tx.dim, kappa);
    const double sx = tx.scale() + l.cwiseAbs().maxCoeff();

    record(r, squareDefect(buildD(tx, l)) / sx, label + " d o d");
    record(r, iotaHomotopyDefect(tx, A) / (tx.scale() * std::max(1.0, A.norm())), label + " iota-homotopy");
    try {
      const double sxy = std::max(sx, ty.scale());
      record(r, homotopyDefect(tx, ty, l, 1e-8 * sx * ty.scale()) / sxy, label + " delta-homotopy");
    } catch (const Error& e) {
      fail(r, fmt::format("{} delta-homotopy: {}", label, e.what()));
    }
  }
  r.cases = cases;
  r.seconds = secondsSince(t0);
  return r;
}

SuiteReport jointSpectrumSuite(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  SuiteReport r;
  r.name = "joint-spectrum";
  r.threshold = 1e-7;
  const int cases = opts.cases > 0 ? opts.cases : 100;
  const int maxDim = opts.maxDim > 0 ? opts.maxDim : 8;
  const int maxKappa = std::clamp(opts.maxKappa, 1, kMaxKappa);
  std::mt19937_64 rng(opts.seed);
  const std::vector<std::vector<int>> shapes{{1, 1, 1}, {2, 1},       {2, 2},       {3, 1, 1},    {1, 1, 1, 1, 2},
                                             {2, 2, 1, 1, 1}, {3, 3, 2}, {1, 2, 1, 2}, {4, 1}, {1, 1, 1, 1, 1, 1, 1, 1}};
  for (int c = 0; c < cases; ++c) {
    const int kappa = 1 + c % maxKappa;
    if (c % 5 == 4) {
      // Hermitian: every joint eigenvalue has h_j = m binom(kappa, j).
      const int m = 1 + c % 3;
      const int distinct = std::max(1, std::min(3, maxDim / m));
      auto t = makeTuple(tuples::symmetricTuple(distinct, m, kappa, rng));
      const std::string label = fmt::format("case {} (hermitian, m = {}, kappa = {})", c, m, kappa);
      for (const auto& e : jointEigenvalues(t).eigenvalues) {
        const auto h = cohomologyDims(buildD(t, -e.lambda));
        for (int j = 0; j <= kappa; ++j)
          if (h.dims[j] != m * binom(kappa, j))
            fail(r, fmt::format("{}: h_{} = {} != {}", label, j, h.dims[j], m * binom(kappa, j)));
        if (fredholmIndex(h.dims) != 0) fail(r, label + ": nonzero Fredholm index");
      }
      continue;
    }
    std::vector<int> shape;
    do {
      shape = shapes[rng() % shapes.size()];
    } while (std::accumulate(shape.begin(), shape.end(), 0) > maxDim);
    auto X = tuples::jordanTuple(shape, kappa, rng);
    auto t = makeTuple(X);
    const std::string label = fmt::format("case {} (jordan, n = {}, kappa = {})", c, t.dim, kappa);
    const auto s = jointEigenvalues(t);
    const auto o = tuples::bruteForceJointEigenvalues(X);
    if (s.eigenvalues.size() != o.size()) {
      fail(r, fmt::format("{}: {} joint eigenvalues, oracle {}", label, s.eigenvalues.size(), o.size()));
      continue;
    }
    for (const auto& oe : o) {
      const JointEigenvalue* best = nullptr;
      double dist = std::numeric_limits<double>::infinity();
      for (const auto& e : s.eigenvalues) {
        const double d = (e.lambda - oe.lambda).cwiseAbs().maxCoeff();
        if (d < dist) {
          dist = d;
          best = &e;
        }
      }
      record(r, dist, label + " eigenvalue distance");
      if (best->algMult != oe.algMult || best->geomMult != oe.geomMult)
        fail(r, fmt::format("{}: multiplicities ({}, {}) vs oracle ({}, {})", label, best->algMult, best->geomMult,
                            oe.algMult, oe.geomMult));
      const auto h = cohomologyDims(buildD(t, -best->lambda));
      if (fredholmIndex(h.dims) != 0) fail(r, label + ": nonzero Fredholm index at a joint eigenvalue");
      if (h.dims[0] != best->geomMult) fail(r, label + ": h_0 differs from the geometric multiplicity");
    }
    // A regular point: the complex is exact.
    CoForm off = randomCoForm(kappa, rng);
    off.array() += cd(7.3, 0.0);
    const auto h = cohomologyDims(buildD(t, off));
    if (std::any_of(h.dims.begin(), h.dims.end(), [](int x) { return x != 0; }))
      fail(r, label + ": cohomology at a regular point");
  }
  r.cases = cases;
  r.seconds = secondsSince(t0);
  return r;
}

SuiteReport rigiditySuite(const SuiteOptions& opts) {
  const auto t0 = Clock::now();
  SuiteReport r;
  r.name = "modulus-one-rigidity";
  r.threshold = 1.0;  // defects are reported relative to their own tolerance
  const int cases = opts.cases > 0 ? opts.cases : 20;
  const int maxDim = opts.maxDim > 0 ? opts.maxDim : 8;
  const int maxKappa = std::clamp(opts.maxKappa, 1, kMaxKappa);
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> freq(-3, 3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int c = 0; c < cases; ++c) {
    const int kappa = 1 + c % std::min(maxKappa, 2);
    const int n = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::max(1, maxDim - 1)));
    const Mat V = c % 2 == 0 ? tuples::randomUnitary(n, rng) : tuples::randomSimilarity(n, rng);
    const Mat Vi = V.inverse();
    std::vector<Mat> X;
    for (int j = 0; j < kappa; ++j) {
      Vec d(n);
      for (auto& x : d) x = cd(0.0, 2.0 * std::numbers::pi * freq(rng));
      X.push_back(V * d.asDiagonal() * Vi);
    }
    const auto t = makeTuple(X, 1e-9);
    const double cond = V.norm() * Vi.norm();
    const std::vector<CutoffProfile> profiles(kappa, makeProfile());
    const std::string label = fmt::format("case {} (n = {}, kappa = {})", c, n, kappa);

    std::vector<CoForm> lambdas;
    for (const auto& e : jointEigenvalues(t).eigenvalues) lambdas.push_back(-e.lambda);
    CoForm generic(kappa);
    for (auto& x : generic) x = cd(0.0, u(rng));
    lambdas.push_back(generic);

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const auto R = buildR(t, lambdas[li], profiles);
      const auto mo = modulusOneTest(R, t, 1e-8);
      if (!mo.atOne || mo.inconsistent)
        fail(r, fmt::format("{} lambda #{}: peripheral eigenvalue away from 1 ({})", label, li, mo.diagnostic));
      for (cd tau : mo.peripheral) record(r, std::abs(tau - 1.0) / 1e-8, label + " peripheral distance");

      // sup_k ||R^k||_F against cond(V) sqrt(n), the bound for a contraction in the eigenbasis.
      double sup = 0.0;
      Mat P = Mat::Identity(n, n);
      for (int k = 1; k <= 10000; ++k) {
        P = P * R.R;
        sup = std::max(sup, P.norm());
      }
      record(r, sup / (cond * std::sqrt(double(n)) * (1.0 + 1e-8)), label + " power bound");

      if (!mo.hasPeripheral) continue;
      Eigen::ComplexEigenSolver<Mat> es(R.R, false);
      double gap = 0.5;
      for (cd tau : es.eigenvalues())
        if (std::abs(1.0 - tau) > 1e-6) gap = std::min(gap, 0.5 * std::abs(1.0 - tau));
      try {
        const auto Pp = projectorPower(R.R);
        const auto Pc = projectorContour(Mat::Identity(n, n) - R.R, gap);
        record(r, (Pp.P - Pc.P).norm() / 1e-8, label + " projector agreement");
      } catch (const Error& e) {
        fail(r, fmt::format("{}: {}", label, e.what()));
      }
    }
  }
  r.cases = cases;
  r.seconds = secondsSince(t0);
  return r;
}

}  // namespace rt
