#include "rt/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "rt/quadrature.hpp"

namespace rt {

namespace {

double shape(ProfileFamily f, double u) {
  if (!(std::abs(u) < 1.0)) return 0.0;
  const double b = std::exp(-1.0 / (1.0 - u * u));
  return f == ProfileFamily::SkewBump ? (1.0 + 0.5 * u) * b : b;
}

double shapeMass(ProfileFamily f) {
  double prev = 0.0;
  for (int n = 64; n <= 8192; n *= 2) {
    const auto& gl = gaussLegendre(n);
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * shape(f, gl.nodes[i]);
    if (n > 64 && std::abs(s - prev) <= 1e-15 * s) return s;
    prev = s;
  }
  return prev;
}

// (e^w - 1) / w
cd phi1(cd w) {
  if (std::abs(w) < 0.5) {
    cd term = 1.0, sum = 1.0;
    for (int k = 2; k < 30; ++k) {
      term *= w / double(k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::exp(w) - 1.0) / w;
}

double conditionNumber(const Mat& V) {
  Eigen::JacobiSVD<Mat> svd(V);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

struct Eig {
  bool ok = false;
  Mat V, Vinv;
  Vec d;
};

Eig diagonalize(const Mat& X) {
  Eig e;
  Eigen::ComplexEigenSolver<Mat> es(X);
  if (es.info() != Eigen::Success) return e;
  if (conditionNumber(es.eigenvectors()) > 1e8) return e;
  e.V = es.eigenvectors();
  e.Vinv = e.V.partialPivLu().inverse();
  e.d = es.eigenvalues();
  e.ok = true;
  return e;
}

// Matrix-valued Gauss-Legendre over the profile support with node doubling.
template <class F>
Mat integrateMatrix(const CutoffProfile& p, F&& f, const QuadratureOptions& q, int* used) {
  Mat prev;
  for (int n = q.nodes; n <= q.maxNodes; n *= 2) {
    const auto& gl = gaussLegendre(n);
    const double half = 0.5 * p.width;
    Mat acc;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = p.center + half * gl.nodes[i];
      const double w = half * gl.weights[i] * p(t);
      if (w == 0.0) continue;
      Mat term = w * f(t);
      if (acc.size() == 0)
        acc = std::move(term);
      else
        acc += term;
    }
    if (prev.size() != 0 && (acc - prev).norm() <= q.relTol * std::max(acc.norm(), 1e-300)) {
      if (used) *used = n;
      return acc;
    }
    prev = std::move(acc);
  }
  throw Error(fmt::format("quadrature non-convergence: node doubling up to {} still changes the result", q.maxNodes));
}

Mat shiftedBy(const Mat& X, cd l) {
  Mat s = X;
  s.diagonal().array() += l;
  return s;
}

Mat chiFactor(const Mat& X, cd lambda, const CutoffProfile& p, const QuadratureOptions& q) {
  const auto n = X.rows();
  auto e = diagonalize(X);
  if (e.ok) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = chiLaplace(p, e.d[i] + lambda, q);
    return e.V * v.asDiagonal() * e.Vinv;
  }
  const Mat A = shiftedBy(X, lambda);
  // int_0^s e^{-tA} dt is the top-right block of exp(s [[-A, I], [0, 0]]).
  return integrateMatrix(
      p,
      [&](double s) {
        Mat Z = Mat::Zero(2 * n, 2 * n);
        Z.topLeftCorner(n, n) = -s * A;
        Z.topRightCorner(n, n) = s * Mat::Identity(n, n);
        Mat E = Z.exp();
        return Mat(E.topRightCorner(n, n));
      },
      q, nullptr);
}

Mat stackMats(const std::vector<Mat>& T) {
  const auto n = T.front().cols();
  Mat S(n * static_cast<Eigen::Index>(T.size()), n);
  for (std::size_t j = 0; j < T.size(); ++j) S.middleRows(static_cast<Eigen::Index>(j) * n, n) = T[j];
  return S;
}

}  // namespace

double CutoffProfile::operator()(double t) const { return norm * shape(family, 2.0 * (t - center) / width); }

double CutoffProfile::peak() const {
  double m = 0.0;
  for (int i = -2000; i <= 2000; ++i) m = std::max(m, shape(family, i / 2000.0));
  return 1.01 * norm * m;
}

CutoffProfile makeProfile(ProfileFamily family, double center, double width) {
  if (!(width > 0.0)) throw Error("profile width must be positive");
  if (!(center - 0.5 * width > 0.0))
    throw Error(fmt::format("profile support ({}, {}) must lie in (0, inf)", center - 0.5 * width,
                            center + 0.5 * width));
  CutoffProfile p;
  p.family = family;
  p.center = center;
  p.width = width;
  p.norm = 1.0 / (0.5 * width * shapeMass(family));
  return p;
}

ProfileFamily parseProfileFamily(const std::string& name) {
  if (name == "bump") return ProfileFamily::Bump;
  if (name == "skew-bump") return ProfileFamily::SkewBump;
  throw Error(fmt::format("unknown profile family '{}'", name));
}

cd integrateProfile(const CutoffProfile& p, const std::function<cd(double)>& f, const QuadratureOptions& q) {
  cd prev = 0.0;
  for (int n = q.nodes; n <= q.maxNodes; n *= 2) {
    const auto& gl = gaussLegendre(n);
    const double half = 0.5 * p.width;
    cd s = 0.0;
    double absMass = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = p.center + half * gl.nodes[i];
      const double w = half * gl.weights[i] * p(t);
      if (w == 0.0) continue;
      const cd v = f(t);
      s += w * v;
      absMass += w * std::abs(v);
    }
    if (n > q.nodes && std::abs(s - prev) <= q.relTol * std::max(std::abs(s), 1e-5 * absMass)) return s;
    prev = s;
  }
  throw Error(fmt::format("quadrature non-convergence: node doubling up to {} still changes the result", q.maxNodes));
}

cd psiHat(const CutoffProfile& p, cd s, const QuadratureOptions& q) {
  const cd mi(0.0, -1.0);
  return integrateProfile(p, [&](double t) { return std::exp(mi * s * t); }, q);
}

cd chiLaplace(const CutoffProfile& p, cd z, const QuadratureOptions& q) {
  return integrateProfile(p, [&](double t) { return t * phi1(-t * z); }, q);
}

Mat averagedFactor(const Mat& X, cd lambda, const CutoffProfile& p, const QuadratureOptions& q, int* nodesUsed) {
  const auto n = X.rows();
  auto e = diagonalize(X);
  if (e.ok) {
    Vec v(n);
    const cd mi(0.0, -1.0);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = psiHat(p, mi * (e.d[i] + lambda), q);
    if (nodesUsed) *nodesUsed = 0;
    return e.V * v.asDiagonal() * e.Vinv;
  }
  return integrateMatrix(
      p, [&](double t) { return Mat(std::exp(-t * lambda) * Mat(-t * X).exp()); }, q, nodesUsed);
}

AveragedOperator buildR(const CommutingTuple& gens, const CoForm& lambda, const std::vector<CutoffProfile>& profiles,
                        const QuadratureOptions& q) {
  if (static_cast<int>(profiles.size()) != gens.kappa || lambda.size() != gens.kappa)
    throw Error("buildR: need one profile and one co-form entry per generator");
  AveragedOperator out;
  out.lambda = lambda;
  out.profiles = profiles;
  out.R = Mat::Identity(gens.dim, gens.dim);
  for (int j = 0; j < gens.kappa; ++j) {
    int used = 0;
    out.R = averagedFactor(gens.mats[j], lambda[j], profiles[j], q, &used) * out.R;
    if (used > 0) out.eigendecomposed = false;
    out.quadratureNodes = std::max(out.quadratureNodes, used);
  }
  return out;
}

FOperator buildF(const CommutingTuple& gens, const CoForm& lambda, const std::vector<CutoffProfile>& profiles,
                 const QuadratureOptions& q) {
  if (static_cast<int>(profiles.size()) != gens.kappa || lambda.size() != gens.kappa)
    throw Error("buildF: need one profile and one co-form entry per generator");
  const int n = gens.dim;
  std::vector<Mat> R, Qt;
  Mat prefix = Mat::Identity(n, n);
  for (int j = 0; j < gens.kappa; ++j) {
    R.push_back(averagedFactor(gens.mats[j], lambda[j], profiles[j], q));
    Qt.push_back(-chiFactor(gens.mats[j], lambda[j], profiles[j], q) * prefix);
    prefix = R.back() * prefix;
  }
  FOperator out;
  out.F = Mat::Identity(n, n) - prefix;
  auto qTuple = makeTuple(Qt, std::numeric_limits<double>::infinity());
  out.Q = buildDelta(qTuple, zeroCoForm(gens.kappa));
  out.homotopyDefect = anticommutatorDefect(buildD(gens, lambda), out.Q, out.F);
  return out;
}

ModulusOneResult modulusOneTest(const AveragedOperator& R, const CommutingTuple& gens, double tol) {
  ModulusOneResult res;
  Eigen::ComplexEigenSolver<Mat> es(R.R);
  std::vector<Eigen::Index> atOne;
  for (Eigen::Index i = 0; i < R.R.rows(); ++i) {
    const cd tau = es.eigenvalues()[i];
    if (std::abs(tau) >= 1.0 - tol) {
      res.hasPeripheral = true;
      res.peripheral.push_back(tau);
      if (std::abs(tau - 1.0) > tol) res.atOne = false;
    }
    if (std::abs(tau - 1.0) <= tol) atOne.push_back(i);
  }
  res.eigvecs = Mat(R.R.rows(), static_cast<Eigen::Index>(atOne.size()));
  for (std::size_t c = 0; c < atOne.size(); ++c) {
    Vec v = es.eigenvectors().col(atOne[c]).normalized();
    res.eigvecs.col(static_cast<Eigen::Index>(c)) = v;
    for (int j = 0; j < gens.kappa; ++j)
      res.kernelResidual = std::max(res.kernelResidual, (shiftedBy(gens.mats[j], R.lambda[j]) * v).norm());
  }
  const double kernelTol = 1e-6 * gens.scale();
  if (!res.atOne || res.kernelResidual > kernelTol) {
    res.inconsistent = true;
    res.diagnostic = !res.atOne
                         ? "peripheral eigenvalue away from 1: numerical inconsistency (truncation artifact)"
                         : fmt::format("eigenvector at 1 is not a joint kernel vector (residual {:.3e}): numerical "
                                       "inconsistency (truncation artifact)",
                                       res.kernelResidual);
  }
  return res;
}

TupleFamily generatorFamily(const CommutingTuple& gens, const std::vector<CutoffProfile>& profiles) {
  TupleFamily fam;
  fam.kappa = gens.kappa;
  fam.dim = gens.dim;
  fam.T = [gens](const CoForm& l) {
    std::vector<Mat> T;
    for (int j = 0; j < gens.kappa; ++j) T.push_back(shiftedBy(gens.mats[j], l[j]));
    return T;
  };
  fam.dT = [gens](const CoForm&) { return std::vector<Mat>(gens.kappa, Mat::Identity(gens.dim, gens.dim)); };
  fam.F = [gens, profiles](const CoForm& l) {
    return Mat(Mat::Identity(gens.dim, gens.dim) - buildR(gens, l, profiles).R);
  };
  return fam;
}

double stackedSigmaMin(const TupleFamily& fam, const CoForm& lambda) {
  Eigen::BDCSVD<Mat> svd(stackMats(fam.T(lambda)));
  return svd.singularValues().minCoeff();
}

CoForm refineCandidate(const TupleFamily& fam, const CoForm& start, int maxSteps) {
  CoForm lambda = start;
  for (int step = 0; step < maxSteps; ++step) {
    const auto T = fam.T(lambda);
    Eigen::BDCSVD<Mat> svd(stackMats(T), Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double sigma = s(s.size() - 1);
    if (sigma == 0.0) break;
    const Vec v = svd.matrixV().col(s.size() - 1);
    const auto dT = fam.dT(lambda);
    CoForm delta(fam.kappa);
    for (int j = 0; j < fam.kappa; ++j) {
      const Vec r = T[j] * v;
      const Vec Jv = dT[j] * v;
      const double jj = Jv.squaredNorm();
      delta[j] = jj > 0.0 ? -Jv.dot(r) / jj : cd(0.0);
    }
    double alpha = 1.0;
    bool improved = false;
    CoForm next;
    for (int h = 0; h < 30; ++h) {
      next = lambda + alpha * delta;
      if (stackedSigmaMin(fam, next) < sigma) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    const double stepSize = (alpha * delta).cwiseAbs().maxCoeff();
    lambda = next;
    if (stepSize <= 1e-15 * (1.0 + lambda.cwiseAbs().maxCoeff())) break;
  }
  return lambda;
}

Resonance classifyCandidate(const TupleFamily& fam, const CoForm& lambda, const DetectOptions& opts) {
  Resonance r;
  r.lambda = lambda;
  {
    Eigen::BDCSVD<Mat> svd(stackMats(fam.T(lambda)));
    const auto& s = svd.singularValues();
    r.residualKernel = s(s.size() - 1) / std::max(1.0, s(0));
  }
  {
    Eigen::BDCSVD<Mat> svd(fam.F(lambda));
    const auto& s = svd.singularValues();
    r.residualF = s(s.size() - 1) / std::max(1.0, s(0));
  }
  const bool kernelFires = r.residualKernel <= opts.tol;
  const bool fFires = r.residualF <= opts.tol;
  if (kernelFires && fFires)
    r.status = "confirmed";
  else if (kernelFires || fFires) {
    const double other = kernelFires ? r.residualF : r.residualKernel;
    r.status = other > 10.0 * opts.tol ? "unconfirmed" : "confirmed";
  } else {
    r.status = "rejected";
  }
  return r;
}

std::vector<Resonance> resonanceDetect(const TupleFamily& fam, const std::vector<CoForm>& grid,
                                       const DetectOptions& opts) {
  std::vector<Resonance> out;
  for (const auto& l0 : grid) {
    if (opts.seedThreshold >= 0.0 && stackedSigmaMin(fam, l0) > opts.seedThreshold) continue;
    const CoForm l = refineCandidate(fam, l0, opts.maxSteps);
    auto c = classifyCandidate(fam, l, opts);
    if (c.status == "rejected") continue;
    bool dup = false;
    for (auto& o : out)
      if ((o.lambda - c.lambda).cwiseAbs().maxCoeff() <= opts.mergeTol * (1.0 + c.lambda.cwiseAbs().maxCoeff())) {
        if (c.residualKernel < o.residualKernel) o = c;
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) {
    for (Eigen::Index j = 0; j < a.lambda.size(); ++j) {
      if (std::abs(a.lambda[j].imag() - b.lambda[j].imag()) > 1e-9) return a.lambda[j].imag() < b.lambda[j].imag();
      if (std::abs(a.lambda[j].real() - b.lambda[j].real()) > 1e-9) return a.lambda[j].real() < b.lambda[j].real();
    }
    return false;
  });
  return out;
}

}  // namespace rt
