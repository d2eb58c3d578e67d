// Random commuting tuples and a brute-force joint-eigenvalue oracle.
#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "rt/types.hpp"

namespace rt::tuples {

inline Mat gaussianMatrix(int n, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cd(g(rng), g(rng));
  return A;
}

inline Mat randomUnitary(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat> qr(gaussianMatrix(n, rng));
  return qr.householderQ() * Mat::Identity(n, n);
}

// Moderately conditioned similarity.
inline Mat randomSimilarity(int n, std::mt19937_64& rng) {
  return Mat::Identity(n, n) + gaussianMatrix(n, rng, 0.3 / std::sqrt(double(n)));
}

inline cd gridValue(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> re(-4, 4), im(-2, 2);
  return cd(0.5 * re(rng), 0.5 * im(rng));
}

// X_j = V (block diagonal polynomials in Jordan blocks) V^{-1}; block sizes
// given, joint eigenvalue coordinates drawn from a half-integer grid.
inline std::vector<Mat> jordanTuple(const std::vector<int>& blocks, int kappa, std::mt19937_64& rng,
                                    bool conjugate = true) {
  int n = 0;
  for (int b : blocks) n += b;
  std::normal_distribution<double> g;
  std::vector<Mat> X(kappa, Mat::Zero(n, n));
  int off = 0;
  for (int b : blocks) {
    Mat N = Mat::Zero(b, b);
    for (int i = 0; i + 1 < b; ++i) N(i, i + 1) = 1.0;
    for (int j = 0; j < kappa; ++j) {
      Mat B = gridValue(rng) * Mat::Identity(b, b);
      Mat P = N;
      for (int p = 1; p < b; ++p) {
        B += cd(g(rng), g(rng)) * P;
        P = P * N;
      }
      X[j].block(off, off, b, b) = B;
    }
    off += b;
  }
  if (conjugate) {
    Mat V = randomSimilarity(n, rng);
    Mat Vi = V.inverse();
    for (auto& x : X) x = V * x * Vi;
  }
  return X;
}

// X_j = p_j(A) for a random A; p_j random cubic.
inline std::vector<Mat> polynomialTuple(int n, int kappa, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat A = gaussianMatrix(n, rng, 1.0 / std::sqrt(double(n)));
  std::vector<Mat> X;
  for (int j = 0; j < kappa; ++j) {
    Mat S = Mat::Zero(n, n), P = Mat::Identity(n, n);
    for (int p = 0; p <= 3; ++p) {
      S += cd(g(rng), g(rng)) * P;
      P = P * A;
    }
    X.push_back(S);
  }
  return X;
}

// Hermitian commuting tuple with joint eigenvalues of multiplicity m each.
inline std::vector<Mat> symmetricTuple(int distinct, int m, int kappa, std::mt19937_64& rng,
                                       std::vector<std::vector<double>>* joint = nullptr) {
  const int n = distinct * m;
  std::uniform_int_distribution<int> v(-6, 6);
  std::vector<std::vector<double>> pts;
  while (static_cast<int>(pts.size()) < distinct) {
    std::vector<double> p(kappa);
    for (auto& x : p) x = 0.5 * v(rng);
    if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
  }
  Mat U = randomUnitary(n, rng);
  std::vector<Mat> X;
  for (int j = 0; j < kappa; ++j) {
    Vec d(n);
    for (int a = 0; a < distinct; ++a)
      for (int r = 0; r < m; ++r) d[a * m + r] = pts[a][j];
    X.push_back(U * d.asDiagonal() * U.adjoint());
  }
  if (joint) *joint = pts;
  return X;
}

inline double minDistinctGap(const Vec& ev, double same) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    for (Eigen::Index j = i + 1; j < ev.size(); ++j) {
      const double d = std::abs(ev[i] - ev[j]);
      if (d > same) gap = std::min(gap, d);
    }
  return gap;
}

struct OracleEigenvalue {
  CoForm lambda;
  int algMult = 0;
  int geomMult = 0;
};

// Null-space basis with a relative cutoff.
inline Mat nullBasis(const Mat& M, double relTol) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > relTol * std::max(smax, 1.0)) ++rank;
  return svd.matrixV().rightCols(M.cols() - rank);
}

inline int intersectionDim(const std::vector<Mat>& bases, double relTol) {
  Mat cur = bases.front();
  for (std::size_t b = 1; b < bases.size(); ++b) {
    if (cur.cols() == 0 || bases[b].cols() == 0) return 0;
    Mat M(cur.rows(), cur.cols() + bases[b].cols());
    M << cur, -bases[b];
    Mat K = nullBasis(M, relTol);
    if (K.cols() == 0) return 0;
    Mat I = cur * K.topRows(cur.cols());
    Eigen::HouseholderQR<Mat> qr(I);
    cur = qr.householderQ() * Mat::Identity(I.rows(), K.cols());
  }
  return static_cast<int>(cur.cols());
}

/**
 * Brute force: per-matrix eigenvalues clustered loosely, every kappa-tuple of
 * cluster centres tested with the stacked kernel; multiplicities from
 * intersections of per-matrix generalised eigenspaces.
 */
inline std::vector<OracleEigenvalue> bruteForceJointEigenvalues(const std::vector<Mat>& X, double kernelTol = 1e-6) {
  const int kappa = static_cast<int>(X.size());
  const int n = static_cast<int>(X.front().rows());
  double scale = 1.0;
  for (const auto& x : X) scale = std::max(scale, x.norm());
  struct Centre {
    cd value;
    int mult;
  };
  std::vector<std::vector<Centre>> centres(kappa);
  for (int j = 0; j < kappa; ++j) {
    Eigen::ComplexEigenSolver<Mat> es(X[j], false);
    std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::vector<bool> used(n, false);
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      cd sum = 0.0;
      int cnt = 0;
      for (int k = i; k < n; ++k)
        if (!used[k] && std::abs(ev[k] - ev[i]) < 1e-3 * scale) {
          used[k] = true;
          sum += ev[k];
          ++cnt;
        }
      centres[j].push_back({sum / double(cnt), cnt});
    }
  }
  std::vector<OracleEigenvalue> out;
  std::vector<std::size_t> idx(kappa, 0);
  while (true) {
    CoForm l(kappa);
    for (int j = 0; j < kappa; ++j) l[j] = centres[j][idx[j]].value;
    Mat S(kappa * n, n);
    for (int j = 0; j < kappa; ++j) {
      S.middleRows(j * n, n) = X[j];
      S.middleRows(j * n, n).diagonal().array() -= l[j];
    }
    Eigen::JacobiSVD<Mat> svd(S);
    if (svd.singularValues().minCoeff() <= kernelTol * scale) {
      OracleEigenvalue o;
      o.lambda = l;
      std::vector<Mat> gen;
      for (int j = 0; j < kappa; ++j) {
        Mat B = X[j];
        B.diagonal().array() -= l[j];
        Mat P = Mat::Identity(n, n);
        for (int p = 0; p < centres[j][idx[j]].mult; ++p) P = P * B;
        gen.push_back(nullBasis(P, 1e-9));
      }
      o.algMult = intersectionDim(gen, 1e-8);
      o.geomMult = static_cast<int>(nullBasis(S, kernelTol).cols());
      out.push_back(o);
    }
    int j = 0;
    while (j < kappa && ++idx[j] == centres[j].size()) idx[j++] = 0;
    if (j == kappa) break;
  }
  return out;
}

}  // namespace rt::tuples
