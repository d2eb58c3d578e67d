#include "rt/jointspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

namespace rt {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Exchange diagonal entries k and k+1 of the Schur form A = U T U^H.
void swapSchur(Mat& T, Mat& U, Eigen::Index k) {
  const auto n = T.rows();
  const cd a = T(k, k), b = T(k + 1, k + 1), t = T(k, k + 1);
  Eigen::Matrix2cd Q;
  const double nrm = std::hypot(std::abs(t), std::abs(b - a));
  if (nrm == 0.0) {
    Q << 0.0, 1.0, 1.0, 0.0;
  } else {
    const cd c = t / nrm, s = (b - a) / nrm;
    Q << c, -std::conj(s), s, std::conj(c);
  }
  T.block(k, 0, 2, n) = Q.adjoint() * T.block(k, 0, 2, n);
  T.block(0, k, n, 2) = T.block(0, k, n, 2) * Q;
  U.block(0, k, n, 2) = U.block(0, k, n, 2) * Q;
  T(k + 1, k) = 0.0;
}

// Stable bubble sort of the Schur diagonal by key.
void sortSchur(Mat& T, Mat& U, std::vector<int> key) {
  const auto n = static_cast<Eigen::Index>(key.size());
  bool moved = true;
  while (moved) {
    moved = false;
    for (Eigen::Index k = 0; k + 1 < n; ++k)
      if (key[k] > key[k + 1]) {
        swapSchur(T, U, k);
        std::swap(key[k], key[k + 1]);
        moved = true;
      }
  }
}

struct Cluster {
  int start = 0;
  int size = 0;
  CoForm lambda;
  double diameter = 0.0;
};

struct Decomposition {
  Mat T, U;
  std::vector<Cluster> clusters;
  std::vector<std::string> warnings;
  double scale = 1.0;
};

Decomposition decompose(const CommutingTuple& tuple, const JointSpecOptions& opts) {
  const int n = tuple.dim, kappa = tuple.kappa;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  Mat C = Mat::Zero(n, n);
  for (int j = 0; j < kappa; ++j) C += cd(gauss(rng), gauss(rng)) * tuple.mats[j];

  Eigen::ComplexSchur<Mat> schur(C);
  Decomposition dec;
  dec.T = schur.matrixT();
  dec.U = schur.matrixU();
  dec.scale = tuple.scale();
  const double scaleC = std::max(C.norm(), std::numeric_limits<double>::min());

  // A defective eigenvalue of multiplicity m splits into m points at distance
  // about (n eps)^(1/m). For m = n..2, single-linkage components of the still
  // unassigned diagonal at radius r(m) = max(clusterTol, (10 n eps)^(1/m)) * ||C||
  // are accepted once they hold at least m points; the rest stay singletons.
  auto radius = [&](int m) {
    return scaleC * std::max(opts.clusterTol, std::pow(10.0 * n * kEps, 1.0 / double(m)));
  };
  std::vector<std::vector<int>> groups;
  std::vector<bool> assigned(n, false);
  for (int m = n; m >= 1; --m) {
    const double r = radius(m);
    std::vector<int> comp(n, -1);
    for (int i = 0; i < n; ++i) {
      if (assigned[i] || comp[i] >= 0) continue;
      std::vector<int> members{i}, stack{i};
      comp[i] = i;
      while (!stack.empty()) {
        const int a = stack.back();
        stack.pop_back();
        for (int b = 0; b < n; ++b)
          if (!assigned[b] && comp[b] < 0 && std::abs(dec.T(a, a) - dec.T(b, b)) <= r) {
            comp[b] = i;
            members.push_back(b);
            stack.push_back(b);
          }
      }
      if (static_cast<int>(members.size()) >= m) {
        for (int b : members) assigned[b] = true;
        groups.push_back(std::move(members));
      }
    }
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });

  std::vector<int> key(n);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (int i : groups[g]) key[i] = static_cast<int>(g);
  std::vector<double> diam(groups.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (int i : groups[g])
      for (int j : groups[g]) diam[g] = std::max(diam[g], std::abs(dec.T(i, i) - dec.T(j, j)));
  sortSchur(dec.T, dec.U, key);

  std::vector<Mat> Tj;
  for (int j = 0; j < kappa; ++j) Tj.push_back(dec.U.adjoint() * tuple.mats[j] * dec.U);
  int start = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Cluster c;
    c.start = start;
    c.size = static_cast<int>(groups[g].size());
    c.diameter = diam[g];
    c.lambda = CoForm(kappa);
    for (int j = 0; j < kappa; ++j) c.lambda[j] = Tj[j].block(start, start, c.size, c.size).trace() / double(c.size);
    if (c.diameter > opts.clusterTol * scaleC)
      dec.warnings.push_back(fmt::format("merged {} eigenvalues spread over {:.2e} into one joint eigenvalue",
                                         c.size, c.diameter));
    start += c.size;
    dec.clusters.push_back(std::move(c));
  }
  return dec;
}

// Orthonormal basis of the invariant subspace belonging to cluster idx.
Mat clusterBasis(const Decomposition& dec, std::size_t idx) {
  Mat T = dec.T, U = dec.U;
  const auto n = T.rows();
  std::vector<int> key(n, 1);
  const auto& c = dec.clusters[idx];
  for (int i = c.start; i < c.start + c.size; ++i) key[i] = 0;
  sortSchur(T, U, key);
  return U.leftCols(c.size);
}

Mat stacked(const CommutingTuple& tuple, const CoForm& lambda) {
  const int n = tuple.dim;
  Mat S(n * tuple.kappa, n);
  for (int j = 0; j < tuple.kappa; ++j) {
    S.middleRows(j * n, n) = tuple.mats[j];
    S.middleRows(j * n, n).diagonal().array() -= lambda[j];
  }
  return S;
}

int nilpotencyOrder(const std::vector<Mat>& N, double scale, double tol) {
  const auto m = N.front().rows();
  struct Term {
    Mat P;
    std::size_t last;
  };
  std::vector<Term> terms{{Mat::Identity(m, m), 0}};
  for (int J = 1; J <= m + 1; ++J) {
    std::vector<Term> next;
    double worst = 0.0;
    for (const auto& t : terms)
      for (std::size_t j = t.last; j < N.size(); ++j) {
        Mat P = N[j] * t.P;
        worst = std::max(worst, P.norm());
        next.push_back({std::move(P), j});
      }
    if (worst <= tol * std::pow(scale, J)) return J;
    terms = std::move(next);
  }
  return static_cast<int>(m) + 1;
}

std::ptrdiff_t matchCluster(const Decomposition& dec, const CoForm& lambda, double tol) {
  std::ptrdiff_t best = -1;
  double bestDist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dec.clusters.size(); ++i) {
    const double dist = (dec.clusters[i].lambda - lambda).cwiseAbs().maxCoeff();
    if (dist < bestDist) {
      bestDist = dist;
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  return bestDist <= tol ? best : -1;
}

int jordanOrderOf(const CommutingTuple& tuple, const Mat& W, const CoForm& lambda, double scale, double tol) {
  std::vector<Mat> N;
  for (int j = 0; j < tuple.kappa; ++j) {
    Mat S = tuple.mats[j];
    S.diagonal().array() -= lambda[j];
    N.push_back(W.adjoint() * S * W);
  }
  return nilpotencyOrder(N, scale, tol);
}

}  // namespace

double stackedKernelResidual(const CommutingTuple& tuple, const CoForm& lambda) {
  Eigen::BDCSVD<Mat> svd(stacked(tuple, lambda));
  return svd.singularValues().minCoeff();
}

JointSpectrum jointEigenvalues(const CommutingTuple& tuple, const JointSpecOptions& opts) {
  auto dec = decompose(tuple, opts);
  JointSpectrum out;
  out.warnings = dec.warnings;
  const double thr = opts.tol * dec.scale;
  for (std::size_t i = 0; i < dec.clusters.size(); ++i) {
    const auto& c = dec.clusters[i];
    JointEigenvalue ev;
    ev.lambda = c.lambda;
    ev.algMult = c.size;
    Eigen::BDCSVD<Mat> svd(stacked(tuple, c.lambda));
    const auto& s = svd.singularValues();
    ev.residual = s.minCoeff();
    ev.geomMult = static_cast<int>((s.array() <= thr).count());
    if (ev.geomMult == 0) {
      out.warnings.push_back(fmt::format("stacked-kernel check failed at cluster {}: residual {:.3e} > {:.3e}", i,
                                         ev.residual, thr));
      ev.geomMult = 1;
    }
    ev.geomMult = std::min(ev.geomMult, ev.algMult);
    ev.jordanOrder = c.size == 1 ? 1 : jordanOrderOf(tuple, clusterBasis(dec, i), c.lambda, dec.scale, opts.tol);
    out.eigenvalues.push_back(std::move(ev));
  }
  return out;
}

Mat weightSpace(const CommutingTuple& tuple, const CoForm& lambda, const JointSpecOptions& opts) {
  auto dec = decompose(tuple, opts);
  auto idx = matchCluster(dec, lambda, std::max(opts.tol, 1e-6) * dec.scale);
  if (idx < 0) return Mat(tuple.dim, 0);
  return clusterBasis(dec, static_cast<std::size_t>(idx));
}

int jordanOrder(const CommutingTuple& tuple, const CoForm& lambda, const JointSpecOptions& opts) {
  auto dec = decompose(tuple, opts);
  auto idx = matchCluster(dec, lambda, std::max(opts.tol, 1e-6) * dec.scale);
  if (idx < 0) return 0;
  const auto& c = dec.clusters[static_cast<std::size_t>(idx)];
  return jordanOrderOf(tuple, clusterBasis(dec, static_cast<std::size_t>(idx)), c.lambda, dec.scale, opts.tol);
}

SpectralProjector projectorContour(const Mat& F, double eps, int nodes) {
  if (F.rows() != F.cols()) throw Error("projectorContour expects a square matrix");
  if (!(eps > 0.0)) throw Error("contour radius must be positive");
  if (nodes < 4) throw Error("contour needs at least 4 nodes");
  const auto n = F.rows();
  Eigen::ComplexEigenSolver<Mat> es(F, false);
  int inside = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::abs(es.eigenvalues()[i]);
    if (std::abs(r - eps) < 0.1 * eps)
      throw Error(fmt::format("eigenvalue {:.6g}{:+.6g}i lies within 0.1*eps of the contour |z| = {:.6g}; choose "
                              "another radius",
                              es.eigenvalues()[i].real(), es.eigenvalues()[i].imag(), eps));
    if (r < eps) ++inside;
  }
  auto partial = [&](int N, int offset, int stride) {
    Mat S = Mat::Zero(n, n);
    for (int k = offset; k < N; k += stride) {
      const cd z = std::polar(eps, 2.0 * std::numbers::pi * k / N);
      Mat A = -F;
      A.diagonal().array() += z;
      S += z * A.partialPivLu().inverse();
    }
    return S;
  };
  int N = nodes;
  Mat P = partial(N, 0, 1) / double(N);
  while (true) {
    const int N2 = 2 * N;
    Mat P2 = 0.5 * P + partial(N2, 1, 2) / double(N2);
    const double change = (P2 - P).norm();
    P = std::move(P2);
    N = N2;
    if (change <= 1e-13 * std::max(1.0, P.norm())) break;
    if (N >= (1 << 16)) throw Error("contour quadrature did not converge");
  }
  SpectralProjector sp;
  sp.P = std::move(P);
  sp.targetEigenvalue = 0.0;
  sp.method = SpectralProjector::Method::Contour;
  sp.rank = inside;
  sp.nodes = N;
  return sp;
}

SpectralProjector projectorPower(const Mat& R, int maxIter, double tol) {
  if (R.rows() != R.cols()) throw Error("projectorPower expects a square matrix");
  Eigen::ComplexEigenSolver<Mat> es(R, false);
  double rho = 0.0, rate = 0.0;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    const cd mu = es.eigenvalues()[i];
    rho = std::max(rho, std::abs(mu));
    if (std::abs(mu - 1.0) > 1e-6) rate = std::max(rate, std::abs(mu));
  }
  if (rho > 1.0 + 1e-8) throw Error(fmt::format("spectral radius {:.12g} exceeds 1", rho));

  Mat P = R;
  double prev = std::numeric_limits<double>::infinity();
  int growing = 0, it = 0;
  bool converged = false;
  for (it = 1; it <= maxIter; ++it) {
    Mat P2 = P * P;
    const double diff = (P2 - P).norm();
    const double scale = std::max(1.0, P2.norm());
    // Once at roundoff level, further squarings only amplify the rounding
    // error on a repeated eigenvalue 1; keep the last contracting iterate.
    if (diff >= prev && prev <= std::sqrt(tol) * scale) {
      converged = true;
      --it;
      break;
    }
    P = std::move(P2);
    if (diff <= tol * scale) {
      converged = true;
      break;
    }
    growing = diff >= prev ? growing + 1 : 0;
    prev = diff;
  }
  if (!converged)
    throw Error(fmt::format("||R^(2k) - R^k|| does not contract geometrically ({} non-contracting squarings); "
                            "peripheral eigenvalue or Jordan block at 1",
                            growing));
  const double fix = std::max((R * P - P).norm(), (P * R - P).norm());
  if (fix > std::sqrt(tol) * std::max(1.0, P.norm()))
    throw Error(fmt::format("peripheral eigenvalue other than 1: ||R P - P|| = {:.3e}", fix));
  SpectralProjector sp;
  sp.rank = static_cast<int>(std::lround(P.trace().real()));
  sp.P = std::move(P);
  sp.targetEigenvalue = 1.0;
  sp.method = SpectralProjector::Method::Power;
  sp.iterations = it;
  sp.rate = rate;
  return sp;
}

}  // namespace rt
