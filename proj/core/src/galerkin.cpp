#include "rt/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"

namespace rt {

namespace {

constexpr double kPi = std::numbers::pi;

using Key = std::vector<long long>;
using Poly = std::map<Key, cd>;

Key keyOf(const IVec& k) { return Key(k.data(), k.data() + k.size()); }

IVec vecOf(const Key& k) {
  IVec v(static_cast<Eigen::Index>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) v[static_cast<Eigen::Index>(i)] = k[i];
  return v;
}

// C-infinity step: 0 for x <= 0, 1 for x >= 1.
double smoothStep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

std::vector<RVec> sphereGrid(int dim, int n) {
  std::vector<RVec> pts;
  if (dim == 1) {
    pts.push_back(RVec::Constant(1, 1.0));
    pts.push_back(RVec::Constant(1, -1.0));
  } else if (dim == 2) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * (i + 0.5) / n;
      RVec v(2);
      v << std::cos(a), std::sin(a);
      pts.push_back(v);
    }
  } else if (dim == 3) {
    // Fibonacci lattice.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      RVec v(3);
      v << r * std::cos(golden * i), r * std::sin(golden * i), z;
      pts.push_back(v);
    }
  } else {
    std::mt19937_64 rng(0xe5c);
    std::normal_distribution<double> g;
    for (int i = 0; i < n; ++i) {
      RVec v(dim);
      for (auto& x : v) x = g(rng);
      pts.push_back(v.normalized());
    }
  }
  return pts;
}

FactorEscape makeFactorEscape(const SuspensionModel& model, int f, const ConeAngles& cones, const EscapeValues& values,
                              const EscapeOptions& opts) {
  const auto& F = model.factors[f];
  FactorEscape e;
  e.dim = F.baseDim;
  e.cones = cones;
  e.values = values;
  e.R = opts.R;
  e.isotropic = opts.isotropic;
  std::vector<RMat> gens;
  for (const auto& M : F.monodromies) gens.push_back(M.transpose().cast<double>());
  RMat G = RMat::Zero(e.dim, e.dim);
  for (std::size_t j = 0; j < gens.size(); ++j) G += (1.0 + 0.6180339887 * double(j + 1)) * gens[j];
  Eigen::EigenSolver<RMat> es(G);
  e.dualBasis = es.eigenvectors().real();
  for (Eigen::Index c = 0; c < e.dim; ++c) e.dualBasis.col(c).normalize();
  e.dualInverse = e.dualBasis.inverse();
  const int goff = model.generatorOffset(f);
  // log|mu_j| per dual eigenvector and generator.
  RMat logMu(e.dim, F.kappa);
  std::vector<double> chi(e.dim, 0.0);
  for (Eigen::Index c = 0; c < e.dim; ++c) {
    const RVec w = e.dualBasis.col(c);
    for (int j = 0; j < F.kappa; ++j) {
      logMu(c, j) = std::log(std::abs((gens[j] * w).dot(w)));
      chi[c] += model.chamber.A0[goff + j] * logMu(c, j) / F.roofs[j].mean();
    }
    (chi[c] > 0 ? e.unstableCols : e.stableCols).push_back(static_cast<int>(c));
  }
  // Integer step n ~ s A0_j / mean roof_j with the chamber's sign pattern.
  for (int s = 1; s <= 64 && e.step.size() == 0; ++s) {
    IVec n(F.kappa);
    for (int j = 0; j < F.kappa; ++j) n[j] = std::llround(s * model.chamber.A0[goff + j] / F.roofs[j].mean());
    if (n.isZero()) continue;
    bool ok = true;
    for (Eigen::Index c = 0; c < e.dim; ++c) {
      double rate = 0.0;
      for (int j = 0; j < F.kappa; ++j) rate += double(n[j]) * logMu(c, j);
      ok = ok && (rate > 0) == (chi[c] > 0) && std::abs(rate) > 1e-9;
    }
    if (!ok) continue;
    e.step = n;
    e.stepTime = s;
  }
  if (e.step.size() == 0) throw Error("no integer chamber step for the escape function");
  RMat D = RMat::Identity(e.dim, e.dim);
  for (int j = 0; j < F.kappa; ++j) {
    const RMat Mj = (e.step[j] >= 0 ? F.monodromies[j] : F.inverses[j]).transpose().cast<double>();
    for (long long p = 0; p < std::llabs(e.step[j]); ++p) D = Mj * D;
  }
  e.dualMaps.push_back(D);
  if (opts.swapRoles) std::swap(e.stableCols, e.unstableCols);
  return e;
}

bool inStableCone(const FactorEscape& e, const RVec& xi) { return e.theta(xi) <= e.cones.stable; }
bool inUnstableCone(const FactorEscape& e, const RVec& xi) { return e.theta(xi) >= 0.5 * kPi - e.cones.unstable; }

struct Verification {
  bool ok = true;
  std::string why;
  double slack = 0.0;
  double cX = std::numeric_limits<double>::infinity();
  int points = 0;
};

Verification verifyFactor(const FactorEscape& e, const EscapeOptions& opts) {
  Verification v;
  if (e.cones.stable <= 0 || e.cones.unstable <= 0 || e.cones.stable + e.cones.unstable >= 0.5 * kPi) {
    v.ok = false;
    v.why = "cone angles leave no neutral region";
    return v;
  }
  const auto grid = sphereGrid(e.dim, opts.sphereGrid);
  v.points = static_cast<int>(grid.size());
  const auto& val = e.values;
  for (const auto& xi : grid) {
    const double m = e.m(xi);
    if (m < -0.5 - 1e-12 || m > 8.0 + 1e-12) {
      v.ok = false;
      v.why = fmt::format("order function {:.4g} outside [-1/2, 8]", m);
    }
    if (inStableCone(e, xi) && m < std::min(4.0, val.high) - 1e-12) {
      v.ok = false;
      v.why = fmt::format("order function {:.4g} < 4 on the cone around Es*", m);
    }
    if (inUnstableCone(e, xi) && m > -0.25 + 1e-12) {
      v.ok = false;
      v.why = fmt::format("order function {:.4g} > -1/4 on the cone around Eu*", m);
    }
    for (const auto& D : e.dualMaps) {
      const double inc = e.m(D * xi) - m;
      v.slack = std::max(v.slack, inc);
    }
  }
  if (v.slack > opts.slack) {
    v.ok = false;
    v.why = fmt::format("order function increases by {:.3e} along the dual dynamics", v.slack);
  }
  if (!v.ok) return v;
  // Per-step decrease of G inside the strict cones, |xi| > R.
  for (int level = 0; level <= 12; ++level) {
    const double rad = e.R * std::pow(2.0, level) * 1.0001;
    for (const auto& u : grid) {
      if (!inStableCone(e, u) && !inUnstableCone(e, u)) continue;
      const RVec xi = rad * u;
      const double g0 = e.G(xi);
      for (const auto& D : e.dualMaps) v.cX = std::min(v.cX, g0 - e.G(D * xi));
    }
  }
  v.cX /= e.stepTime;
  if (!(v.cX > 0.0)) {
    v.ok = false;
    v.why = fmt::format("escape function does not decrease inside the cones (cX = {:.3e})", v.cX);
  }
  return v;
}

// Polynomial product restricted to coefficients above a floor.
Poly multiply(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) {
      Key k(ka.size());
      for (std::size_t i = 0; i < k.size(); ++i) k[i] = ka[i] + kb[i];
      out[k] += ca * cb;
    }
  for (auto it = out.begin(); it != out.end();)
    it = std::abs(it->second) < 1e-300 ? out.erase(it) : std::next(it);
  return out;
}

Poly expSeries(const Roof& r, cd lambda) {
  Poly tilde;
  cd r0 = 0.0;
  for (const auto& m : r.modes) {
    if (m.q.isZero())
      r0 += m.c;
    else
      tilde[keyOf(m.q)] += m.c;
  }
  const cd pre = std::exp(-lambda * r0);
  Poly sum;
  sum[Key(static_cast<std::size_t>(r.dim), 0)] = pre;
  Poly term = sum;
  for (int n = 1; n <= 400; ++n) {
    term = multiply(term, tilde);
    for (auto& [k, c] : term) c *= -lambda / double(n);
    double mx = 0.0;
    for (const auto& [k, c] : term) {
      sum[k] += c;
      mx = std::max(mx, std::abs(c));
    }
    if (mx < 1e-14 * std::max(1.0, std::abs(pre)) || term.empty()) return sum;
  }
  throw Error("exponential series of the roof did not converge");
}

std::vector<RoofMode> toModes(const Poly& p, double floor = 0.0) {
  std::vector<RoofMode> out;
  for (const auto& [k, c] : p)
    if (std::abs(c) > floor) out.push_back({vecOf(k), c});
  return out;
}

Mat dense(const SpMat& S) { return Mat(S); }

}  // namespace

double FactorEscape::theta(const RVec& xi) const {
  const RVec c = dualInverse * xi;
  double s = 0.0, u = 0.0;
  for (int i : stableCols) s += c[i] * c[i];
  for (int i : unstableCols) u += c[i] * c[i];
  return std::atan2(std::sqrt(u), std::sqrt(s));
}

double FactorEscape::m(const RVec& xi) const {
  if (isotropic) return 1.0;
  const double th = theta(xi);
  const double w = (0.5 * kPi - cones.stable - cones.unstable) / 3.0;
  const double sigS = 1.0 - smoothStep((th - cones.stable) / w);
  const double sigU = smoothStep((th - (0.5 * kPi - cones.unstable - w)) / w);
  const double m = values.high * sigS + values.low * sigU + values.neutral * (1.0 - sigS - sigU);
  return std::clamp(m, -0.5, 8.0);
}

double FactorEscape::G(const RVec& xi) const {
  const double r = xi.norm();
  if (r <= 0.5 * R) return 1.0;
  const double g = m(xi) * std::log1p(r);
  if (r >= R) return g;
  const double chi = smoothStep((r - 0.5 * R) / (0.5 * R));
  return (1.0 - chi) + chi * g;
}

EscapeProfile buildEscape(const SuspensionModel& model, const ConeAngles& cones, const EscapeValues& values,
                          const EscapeOptions& opts) {
  EscapeProfile out;
  out.requested = cones;
  ConeAngles c = cones;
  std::string lastWhy;
  for (int attempt = 0; attempt <= opts.maxShrink; ++attempt) {
    std::vector<FactorEscape> fs;
    bool ok = true;
    double cX = std::numeric_limits<double>::infinity(), slack = 0.0;
    int pts = 0;
    for (std::size_t f = 0; f < model.factors.size(); ++f) {
      auto e = makeFactorEscape(model, static_cast<int>(f), c, values, opts);
      auto v = verifyFactor(e, opts);
      pts += v.points;
      slack = std::max(slack, v.slack);
      if (!v.ok) {
        ok = false;
        lastWhy = fmt::format("factor {}: {}", f, v.why);
        break;
      }
      cX = std::min(cX, v.cX);
      fs.push_back(std::move(e));
    }
    if (ok) {
      out.factors = std::move(fs);
      out.used = c;
      out.shrinkCount = attempt;
      out.cX = cX;
      out.monotonicitySlack = slack;
      out.gridPoints = pts;
      return out;
    }
    c.stable *= 0.7;
    c.unstable *= 0.7;
  }
  throw Error(fmt::format("escape function invalid after {} cone shrinks: {}", opts.maxShrink, lastWhy));
}

int LatticeBall::find(const IVec& k) const {
  auto it = index.find(keyOf(k));
  return it == index.end() ? -1 : it->second;
}

LatticeBall latticeBall(int dim, int K) {
  if (dim < 1 || K < 0) throw Error("invalid lattice ball");
  LatticeBall b;
  b.dim = dim;
  b.K = K;
  IVec k = IVec::Constant(dim, -K);
  const long long K2 = static_cast<long long>(K) * K;
  while (true) {
    if (k.squaredNorm() <= K2) {
      b.index[keyOf(k)] = static_cast<int>(b.modes.size());
      b.modes.push_back(k);
    }
    int i = dim - 1;
    while (i >= 0 && k[i] == K) k[i--] = -K;
    if (i < 0) break;
    ++k[i];
  }
  return b;
}

int truncationCeiling(int dim) {
  if (dim <= 3) return 48;
  if (dim == 4) return 24;
  return 12;
}

std::vector<RoofMode> expRoofCoefficients(const Roof& r, cd lambda) { return toModes(expSeries(r, lambda)); }

std::vector<RoofMode> expRoofDerivative(const Roof& r, cd lambda) {
  Poly e = expSeries(r, lambda), rp;
  for (const auto& m : r.modes) rp[keyOf(m.q)] -= m.c;
  return toModes(multiply(rp, e));
}

FactorTruncation buildFactorTruncation(const SuspensionModel& model, int f, const FactorEscape& escape, int K, int N,
                                       const CoForm& lambda, bool derivative) {
  const auto& F = model.factors[f];
  if (K > truncationCeiling(F.baseDim))
    throw Error(fmt::format("K = {} exceeds the ceiling {} for a {}-dimensional factor", K,
                            truncationCeiling(F.baseDim), F.baseDim));
  if (lambda.size() != F.kappa) throw Error("lambda must have one entry per generator of the factor");
  FactorTruncation t;
  t.ball = latticeBall(F.baseDim, K);
  const int n = t.ball.size();
  t.weights = RVec(n);
  std::vector<double> G(n);
  for (int i = 0; i < n; ++i) {
    G[i] = escape.G(t.ball.modes[i].cast<double>());
    t.weights[i] = N * G[i];  // log weight; e^{N G} itself overflows for large N
  }
  for (int j = 0; j < F.kappa; ++j) {
    const auto coeffs = derivative ? expRoofDerivative(F.roofs[j], lambda[j]) : expRoofCoefficients(F.roofs[j], lambda[j]);
    const IMat D = F.monodromies[j].transpose();
    std::vector<Eigen::Triplet<cd>> trip;
    for (int a = 0; a < n; ++a)
      for (const auto& c : coeffs) {
        const IVec l = t.ball.modes[a] + c.q;
        const int b = t.ball.find(D * l);
        if (b < 0) continue;
        trip.emplace_back(b, a, c.c * std::exp(N * (G[b] - G[a])));
      }
    SpMat L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    L.makeCompressed();
    t.L.push_back(std::move(L));
  }
  for (std::size_t a = 0; a < t.L.size(); ++a)
    for (std::size_t b = a + 1; b < t.L.size(); ++b) {
      SpMat C = t.L[a] * t.L[b] - t.L[b] * t.L[a];
      t.commDefect = std::max(t.commDefect, C.norm());
    }
  return t;
}

TruncatedGenerator buildTruncation(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                                   const CoForm& lambda) {
  if (lambda.size() != model.kappa) throw Error("lambda must have kappa entries");
  TruncatedGenerator tg;
  tg.K = K;
  tg.N = N;
  tg.lambda = lambda;
  for (std::size_t f = 0; f < model.factors.size(); ++f) {
    const int off = model.generatorOffset(static_cast<int>(f));
    const CoForm lf = lambda.segment(off, model.factors[f].kappa);
    tg.factors.push_back(buildFactorTruncation(model, static_cast<int>(f), escape.factors[f], K, N, lf));
    tg.commDefect = std::max(tg.commDefect, tg.factors.back().commDefect);
  }
  return tg;
}

std::vector<int> coreModes(const SuspensionModel& model, int f, int K) {
  const auto& F = model.factors[f];
  const auto ball = latticeBall(F.baseDim, K);
  const int n = ball.size();
  std::vector<char> in(n, 1);
  for (const auto& M : F.monodromies) {
    const IMat D = M.transpose();
    std::vector<int> next(n);
    for (int a = 0; a < n; ++a) next[a] = ball.find(D * ball.modes[a]);
    // Modes on cycles of the functional graph a -> next[a].
    std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<char> cyc(n, 0);
    for (int s = 0; s < n; ++s) {
      if (state[s]) continue;
      std::vector<int> path;
      int a = s;
      while (a >= 0 && state[a] == 0) {
        state[a] = 1;
        path.push_back(a);
        a = next[a];
      }
      if (a >= 0 && state[a] == 1)
        for (auto it = std::find(path.begin(), path.end(), a); it != path.end(); ++it) cyc[*it] = 1;
      for (int p : path) state[p] = 2;
    }
    for (int a = 0; a < n; ++a) in[a] = in[a] && cyc[a];
  }
  // Keep the largest subset invariant under every generator.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& M : F.monodromies) {
      const IMat D = M.transpose();
      for (int a = 0; a < n; ++a)
        if (in[a]) {
          const int b = ball.find(D * ball.modes[a]);
          if (b < 0 || !in[b]) {
            in[a] = 0;
            changed = true;
          }
        }
    }
  }
  std::vector<int> core;
  for (int a = 0; a < n; ++a)
    if (in[a]) core.push_back(a);
  return core;
}

std::vector<int> kunneth(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> h(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) h[i + j] += a[i] * b[j];
  return h;
}

double Window::reOf(const CoForm& lambda) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) s += A0[j] * lambda[j].real();
  return s;
}

bool Window::contains(const CoForm& lambda) const { return reOf(lambda) >= beta - 1e-9; }

namespace {

// Factor-level lambda-family, either on the cycle core (constant roofs) or dense.
struct FactorFamily {
  TupleFamily fam;
  bool core = false;
  int dim = 0;
};

FactorFamily factorFamily(const SuspensionModel& model, int f, const FactorEscape& esc, int K, int N) {
  const auto& F = model.factors[f];
  bool constant = true;
  for (const auto& r : F.roofs) constant = constant && r.isConstant();
  FactorFamily out;
  out.core = constant;
  std::vector<int> keep;
  if (constant) keep = coreModes(model, f, K);
  const int kappa = F.kappa;
  auto restrict = [keep, constant](const SpMat& S) {
    if (!constant) return dense(S);
    Mat D(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = 0; b < keep.size(); ++b) D(a, b) = S.coeff(keep[a], keep[b]);
    return D;
  };
  std::function<std::vector<Mat>(const CoForm&, bool)> mats;
  if (constant) {
    // L_j(lambda) = e^{-lambda_j c_j} L_j(0).
    std::vector<Mat> base;
    for (const auto& L : buildFactorTruncation(model, f, esc, K, N, zeroCoForm(kappa)).L) base.push_back(restrict(L));
    std::vector<double> c;
    for (const auto& r : F.roofs) c.push_back(r.mean());
    mats = [base, c](const CoForm& l, bool deriv) {
      std::vector<Mat> out;
      for (std::size_t j = 0; j < base.size(); ++j) {
        const cd e = std::exp(-l[j] * c[j]);
        out.push_back((deriv ? -c[j] * e : e) * base[j]);
      }
      return out;
    };
  } else {
    mats = [=, &model, &esc](const CoForm& l, bool deriv) {
      auto t = buildFactorTruncation(model, f, esc, K, N, l, deriv);
      std::vector<Mat> out;
      for (const auto& L : t.L) out.push_back(restrict(L));
      return out;
    };
  }
  out.dim = constant ? static_cast<int>(keep.size()) : latticeBall(F.baseDim, K).size();
  const int n = out.dim;
  out.fam.kappa = kappa;
  out.fam.dim = n;
  out.fam.T = [mats, n](const CoForm& l) {
    auto L = mats(l, false);
    for (auto& x : L) x -= Mat::Identity(n, n);
    return L;
  };
  out.fam.dT = [mats](const CoForm& l) { return mats(l, true); };
  out.fam.F = [mats, n](const CoForm& l) {
    auto L = mats(l, false);
    Mat P = Mat::Identity(n, n);
    for (const auto& x : L) P = P * (0.5 * (x + x * x));
    return Mat(Mat::Identity(n, n) - P);
  };
  return out;
}

// Newton on the eigenvalue of L(lambda) closest to 1 (rank-one factors).
struct EigenNewton {
  cd lambda;
  bool converged = false;
  int steps = 0;
};

EigenNewton eigenNewton(const TupleFamily& fam, cd start, int maxSteps = 40) {
  EigenNewton r;
  r.lambda = start;
  const int n = fam.dim;
  std::mt19937_64 rng(0x1ee7);
  std::normal_distribution<double> g;
  Vec v(n), w(n);
  for (int i = 0; i < n; ++i) {
    v[i] = cd(g(rng), g(rng));
    w[i] = cd(g(rng), g(rng));
  }
  for (int step = 0; step < maxSteps; ++step) {
    CoForm l(1);
    l[0] = r.lambda;
    const Mat A = fam.T(l)[0];  // L - Id
    // A tiny shift keeps the solve finite when A is exactly singular.
    Eigen::PartialPivLU<Mat> lu(A - cd(1e-13, 0) * Mat::Identity(n, n));
    for (int it = 0; it < 3; ++it) {
      v = lu.solve(v).normalized();
      w = lu.adjoint().solve(w).normalized();
    }
    const cd nu = v.dot(A * v);  // v normalised: Rayleigh quotient
    const Mat dL = fam.dT(l)[0];
    const cd denom = w.dot(v);
    if (std::abs(denom) < 1e-14) break;
    const cd deriv = w.dot(dL * v) / denom;
    if (std::abs(deriv) < 1e-300) break;
    const cd delta = -nu / deriv;
    r.lambda += delta;
    r.steps = step + 1;
    if (!std::isfinite(r.lambda.real()) || !std::isfinite(r.lambda.imag())) break;
    if (std::abs(delta) <= 1e-13 * (1.0 + std::abs(r.lambda))) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// Eigenvalue of L nearest mu0 by shift-invert iteration.
cd nearestEigenvalue(const Mat& L, cd mu0) {
  const Eigen::Index n = L.rows();
  Eigen::PartialPivLU<Mat> lu(L - (mu0 + cd(1e-12, 1e-12)) * Mat::Identity(n, n));
  std::mt19937_64 rng(0xa11);
  std::normal_distribution<double> g;
  Vec v(n);
  for (auto& x : v) x = cd(g(rng), g(rng));
  v.normalize();
  cd mu = mu0;
  for (int it = 0; it < 60; ++it) {
    v = lu.solve(v).normalized();
    const cd next = v.dot(L * v);
    if (std::abs(next - mu) < 1e-13 * (1.0 + std::abs(mu)) && it > 2) return next;
    mu = next;
  }
  return mu;
}

bool sameLambda(const CoForm& a, const CoForm& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol * (1.0 + b.cwiseAbs().maxCoeff());
}

// Absolute floor on the scale of L = T + Id, so that T ~ 1e-16 counts as zero.
std::vector<int> cohomologyOf(const TupleFamily& fam, const CoForm& l) {
  auto T = fam.T(l);
  double scale = 1.0;
  for (const auto& t : T) scale = std::max(scale, Eigen::BDCSVD<Mat>(t + Mat::Identity(t.rows(), t.cols())).singularValues()(0));
  return cohomologyDims(buildD(makeTuple(std::move(T), std::numeric_limits<double>::infinity()), zeroCoForm(fam.kappa)),
                        1e-8, 1e-8 * scale)
      .dims;
}

// Seeds for a constant-roof core family: joint eigenvalues of the core tuple at 0 and all branches.
std::vector<CoForm> coreSeeds(const SuspensionModel& model, int f, const FactorFamily& ff, double reLo, double reHi,
                              double imMax) {
  const auto& F = model.factors[f];
  const int kappa = F.kappa;
  auto L = ff.fam.T(zeroCoForm(kappa));
  for (auto& x : L) x += Mat::Identity(ff.dim, ff.dim);
  std::vector<CoForm> seeds;
  if (ff.dim == 0) return seeds;
  auto js = jointEigenvalues(makeTuple(L, 1e-8));
  for (const auto& ev : js.eigenvalues) {
    // L_j(lambda) = e^{-lambda_j c_j} L_j(0) on constant roofs.
    std::vector<std::vector<cd>> coords(kappa);
    bool skip = false;
    for (int j = 0; j < kappa; ++j) {
      if (std::abs(ev.lambda[j]) < 1e-300) {
        skip = true;
        break;
      }
      const double c = F.roofs[j].mean();
      const cd base = std::log(ev.lambda[j]) / c;
      if (base.real() < reLo - 1e-9 || base.real() > reHi) {
        skip = true;
        break;
      }
      const double period = 2.0 * kPi / c;
      const long long mlo = static_cast<long long>(std::ceil((-imMax - base.imag()) / period));
      const long long mhi = static_cast<long long>(std::floor((imMax - base.imag()) / period));
      for (long long m = mlo; m <= mhi; ++m) coords[j].push_back(base + cd(0.0, period * double(m)));
    }
    if (skip) continue;
    std::vector<std::size_t> idx(kappa, 0);
    bool any = true;
    for (const auto& c : coords) any = any && !c.empty();
    if (!any) continue;
    while (true) {
      CoForm l(kappa);
      for (int j = 0; j < kappa; ++j) l[j] = coords[j][idx[j]];
      seeds.push_back(l);
      int j = 0;
      while (j < kappa && ++idx[j] == coords[j].size()) idx[j++] = 0;
      if (j == kappa) break;
    }
  }
  return seeds;
}

}  // namespace

std::vector<Resonance> factorResonances(const SuspensionModel& model, const EscapeProfile& escape, int f, int K, int N,
                                        double beta, const ResonanceSearch& search, std::vector<std::string>* notes) {
  const auto& F = model.factors[f];
  const int goff = model.generatorOffset(f);
  // Search bound per coordinate: other coordinates sit at Re <= 0.
  double reLo = beta;
  {
    double a0 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < F.kappa; ++j) a0 = std::min(a0, model.chamber.A0[goff + j]);
    if (a0 > 0) reLo = beta / a0;
    reLo -= 0.05;
  }
  const double reHi = search.reMax;
  std::vector<Resonance> found;
  bool constant = true;
  for (const auto& r : F.roofs) constant = constant && r.isConstant();

  if (constant) {
    auto ff = factorFamily(model, f, escape.factors[f], K, N);
    auto seeds = coreSeeds(model, f, ff, reLo, reHi, search.imMax);
    auto res = resonanceDetect(ff.fam, seeds, search.detect);
    // Stability: K -> K + refineK and N -> N + 1.
    auto ffK = factorFamily(model, f, escape.factors[f], std::min(K + search.refineK, truncationCeiling(F.baseDim)), N);
    auto ffN = factorFamily(model, f, escape.factors[f], K, N + 1);
    for (auto& r : res) {
      const CoForm lk = refineCandidate(ffK.fam, r.lambda, search.detect.maxSteps);
      const CoForm ln = refineCandidate(ffN.fam, r.lambda, search.detect.maxSteps);
      if (!sameLambda(lk, r.lambda, search.stabilityTol) || !sameLambda(ln, r.lambda, search.stabilityTol)) continue;
      r.cohomology = cohomologyOf(ff.fam, r.lambda);
      r.multiplicity = r.cohomology.empty() ? 0 : r.cohomology[0];
      found.push_back(r);
    }
    if (notes)
      notes->push_back(fmt::format("factor {}: constant roofs, cycle core of {} mode(s) out of the K = {} ball", f,
                                   ff.dim, K));
    return found;
  }

  if (F.kappa != 1) throw Error("variable roofs require a rank-one factor");
  const int Kd = search.denseK > 0 ? search.denseK : std::min(K, 10);
  auto ff = factorFamily(model, f, escape.factors[f], Kd, N);
  auto ffK = factorFamily(model, f, escape.factors[f], Kd + search.refineK, N);
  auto ffN = factorFamily(model, f, escape.factors[f], Kd, N + 1);
  const double rbar = F.roofs[0].mean();
  std::vector<cd> seeds;
  const int steps = static_cast<int>(std::ceil(search.imMax / search.gridStep));
  for (int s = -steps; s <= steps; ++s) {
    const double y = s * search.gridStep;
    CoForm l(1);
    l[0] = cd(0.0, y);
    auto L = ff.fam.T(l)[0];
    L += Mat::Identity(ff.dim, ff.dim);
    Eigen::ComplexEigenSolver<Mat> es(L, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const cd mu = es.eigenvalues()[i];
      if (std::abs(mu) < 1e-12) continue;
      const cd cand = cd(0.0, y) + std::log(mu) / rbar;
      if (cand.real() < reLo - 0.25 || cand.real() > reHi) continue;
      if (std::abs(cand.imag() - y) > 0.5 * search.gridStep + 1e-12) continue;
      if (std::abs(cand.imag()) > search.imMax) continue;
      seeds.push_back(cand);
    }
  }
  for (const cd s : seeds) {
    auto en = eigenNewton(ff.fam, s);
    if (!en.converged) continue;
    CoForm l(1);
    l[0] = en.lambda;
    if (l[0].real() < reLo || l[0].real() > reHi || std::abs(l[0].imag()) > search.imMax) continue;
    bool dup = false;
    for (const auto& r : found) dup = dup || sameLambda(r.lambda, l, search.detect.mergeTol);
    if (dup) continue;
    auto r = classifyCandidate(ff.fam, l, search.detect);
    if (r.status == "rejected") continue;
    const auto ek = eigenNewton(ffK.fam, en.lambda);
    const auto en1 = eigenNewton(ffN.fam, en.lambda);
    CoForm lk(1), ln(1);
    lk[0] = ek.lambda;
    ln[0] = en1.lambda;
    if (!ek.converged || !en1.converged || !sameLambda(lk, l, search.stabilityTol) ||
        !sameLambda(ln, l, search.stabilityTol)) {
      if (notes)
        notes->push_back(fmt::format("factor {}: candidate {:.6f}{:+.6f}i unstable under refinement (moved {:.2e})",
                                     f, l[0].real(), l[0].imag(), std::abs(lk[0] - l[0])));
      continue;
    }
    r.cohomology = cohomologyOf(ff.fam, l);
    r.multiplicity = r.cohomology.empty() ? 0 : r.cohomology[0];
    found.push_back(r);
  }
  std::sort(found.begin(), found.end(), [](const Resonance& a, const Resonance& b) {
    if (std::abs(a.lambda[0].imag() - b.lambda[0].imag()) > 1e-9) return a.lambda[0].imag() < b.lambda[0].imag();
    return a.lambda[0].real() < b.lambda[0].real();
  });
  if (notes)
    notes->push_back(fmt::format("factor {}: variable roof, dense truncation K = {} ({} modes), {} seed(s)", f, Kd,
                                 ff.dim, seeds.size()));
  return found;
}

namespace {

// Empirical boundary from stability of eigenvalues near modulus one (variable-roof factors).
double empiricalBeta(const SuspensionModel& model, const EscapeProfile& escape, int f, int K, int N, double betaTheory,
                     const ResonanceSearch& search) {
  const auto& F = model.factors[f];
  bool constant = true;
  for (const auto& r : F.roofs) constant = constant && r.isConstant();
  // Constant roofs: monomial truncations; off the cycle core the spectrum is
  // exactly {0}, so nothing spurious approaches modulus one.
  if (constant) return -std::numeric_limits<double>::infinity();
  const int Kd = search.denseK > 0 ? search.denseK : std::min(K, 10);
  auto ff = factorFamily(model, f, escape.factors[f], Kd, N);
  auto ffK = factorFamily(model, f, escape.factors[f], Kd + search.refineK, N);
  auto ffN = factorFamily(model, f, escape.factors[f], Kd, N + 1);
  const double rbar = F.roofs[0].mean();
  auto matrix = [](const FactorFamily& x, cd l) {
    CoForm c(1);
    c[0] = l;
    return Mat(x.fam.T(c)[0] + Mat::Identity(x.dim, x.dim));
  };
  const double bottom = std::min(betaTheory, -0.05) - 0.5;
  double worst = -std::numeric_limits<double>::infinity();
  for (double re = 0.0; re >= bottom; re -= 0.25) {
    for (double y : {0.0, kPi}) {
      const cd l(re, y);
      const Mat L = matrix(ff, l);
      Eigen::ComplexEigenSolver<Mat> es(L, false);
      const Vec a = es.eigenvalues();
      Mat LK, LN;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (std::abs(std::log(std::abs(a[i]) + 1e-300)) > 0.25 * rbar) continue;  // not near modulus one
        if (LK.size() == 0) {
          LK = matrix(ffK, l);
          LN = matrix(ffN, l);
        }
        const double db = std::abs(nearestEigenvalue(LK, a[i]) - a[i]);
        const double dc = std::abs(nearestEigenvalue(LN, a[i]) - a[i]);
        if (db > 1e-4 || dc > 1e-4) worst = std::max(worst, re + std::log(std::abs(a[i])) / rbar);
      }
    }
  }
  return worst;
}

}  // namespace

Window calibrateWindow(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                       const ResonanceSearch& search) {
  Window w;
  w.K = K;
  w.N = N;
  w.A0 = model.chamber.A0;
  w.cX = escape.cX;
  w.cL2 = cL2(model, w.A0).value;
  w.betaTheory = -double(N) * w.cX + w.cL2;
  w.betaEmpirical = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < model.factors.size(); ++f) {
    double b = empiricalBeta(model, escape, static_cast<int>(f), K, N, w.betaTheory, search);
    const int goff = model.generatorOffset(static_cast<int>(f));
    if (std::isfinite(b)) b *= w.A0[goff];
    w.betaEmpirical = std::max(w.betaEmpirical, b);
  }
  w.beta = std::max(w.betaTheory, w.betaEmpirical);
  return w;
}

int calibrateN(const EscapeProfile& escape, double depth) {
  if (!(escape.cX > 0.0)) throw Error("escape function has no decay (cX <= 0)");
  return std::max(1, static_cast<int>(std::ceil(depth / escape.cX)));
}

WindowResult resonancesInWindow(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                                const ResonanceSearch& search) {
  WindowResult out;
  out.window = calibrateWindow(model, escape, K, N, search);
  std::vector<std::vector<Resonance>> per;
  for (std::size_t f = 0; f < model.factors.size(); ++f)
    per.push_back(
        factorResonances(model, escape, static_cast<int>(f), K, N, out.window.beta, search, &out.notes));
  std::vector<std::size_t> idx(per.size(), 0);
  for (const auto& p : per)
    if (p.empty()) return out;
  while (true) {
    Resonance r;
    r.lambda = CoForm(model.kappa);
    r.cohomology = {1};
    r.status = "confirmed";
    int off = 0;
    for (std::size_t f = 0; f < per.size(); ++f) {
      const auto& x = per[f][idx[f]];
      r.lambda.segment(off, x.lambda.size()) = x.lambda;
      off += static_cast<int>(x.lambda.size());
      r.cohomology = kunneth(r.cohomology, x.cohomology);
      r.residualKernel = std::max(r.residualKernel, x.residualKernel);
      r.residualF = std::max(r.residualF, x.residualF);
      if (x.status != "confirmed") r.status = x.status;
    }
    r.multiplicity = r.cohomology[0];
    if (out.window.contains(r.lambda) && r.multiplicity > 0) out.resonances.push_back(std::move(r));
    std::size_t f = 0;
    while (f < per.size() && ++idx[f] == per[f].size()) idx[f++] = 0;
    if (f == per.size()) break;
  }
  std::sort(out.resonances.begin(), out.resonances.end(), [](const Resonance& a, const Resonance& b) {
    for (Eigen::Index j = 0; j < a.lambda.size(); ++j) {
      if (std::abs(a.lambda[j].imag() - b.lambda[j].imag()) > 1e-9) return a.lambda[j].imag() < b.lambda[j].imag();
      if (std::abs(a.lambda[j].real() - b.lambda[j].real()) > 1e-9) return a.lambda[j].real() < b.lambda[j].real();
    }
    return false;
  });
  return out;
}

std::vector<Mat> denseTuple(const SuspensionModel& model, const EscapeProfile& escape, int K, int N,
                            const CoForm& lambda) {
  std::vector<std::vector<Mat>> fl;
  std::vector<int> dims;
  for (std::size_t f = 0; f < model.factors.size(); ++f) {
    const int off = model.generatorOffset(static_cast<int>(f));
    auto t = buildFactorTruncation(model, static_cast<int>(f), escape.factors[f], K, N,
                                   lambda.segment(off, model.factors[f].kappa));
    std::vector<Mat> m;
    for (const auto& L : t.L) m.push_back(dense(L));
    dims.push_back(t.ball.size());
    fl.push_back(std::move(m));
  }
  long long total = 1;
  for (int d : dims) total *= d;
  if (total > 4000) throw Error("denseTuple is meant for small truncations");
  std::vector<Mat> out;
  for (std::size_t f = 0; f < fl.size(); ++f)
    for (const auto& L : fl[f]) {
      Mat T = Mat::Identity(1, 1);
      for (std::size_t g = 0; g < fl.size(); ++g) {
        const Mat piece = (g == f) ? Mat(L - Mat::Identity(dims[g], dims[g])) : Mat(Mat::Identity(dims[g], dims[g]));
        Mat K2(T.rows() * piece.rows(), T.cols() * piece.cols());
        for (Eigen::Index a = 0; a < T.rows(); ++a)
          for (Eigen::Index b = 0; b < T.cols(); ++b)
            K2.block(a * piece.rows(), b * piece.cols(), piece.rows(), piece.cols()) = T(a, b) * piece;
        T = std::move(K2);
      }
      out.push_back(std::move(T));
    }
  return out;
}

}  // namespace rt
