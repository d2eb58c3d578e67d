#include "rt/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace rt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double mod1(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

RVec mod1(const RVec& x) {
  RVec r(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = mod1(x[i]);
  return r;
}

long long determinant(const IMat& M) {
  // Bareiss fraction-free elimination.
  const auto n = M.rows();
  IMat A = M;
  long long sign = 1, prev = 1;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (A(k, k) == 0) {
      Eigen::Index p = k + 1;
      while (p < n && A(p, k) == 0) ++p;
      if (p == n) return 0;
      A.row(k).swap(A.row(p));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j) A(i, j) = (A(i, j) * A(k, k) - A(i, k) * A(k, j)) / prev;
    prev = A(k, k);
  }
  return sign * A(n - 1, n - 1);
}

IMat integerInverse(const IMat& M) {
  const long long det = determinant(M);
  if (det != 1 && det != -1) throw Error(fmt::format("monodromy must have determinant +-1, got {}", det));
  RMat inv = M.cast<double>().inverse();
  IMat out = inv.array().round().cast<long long>().matrix();
  if (M * out != IMat::Identity(M.rows(), M.cols())) throw Error("integer inverse failed");
  return out;
}

struct EigenDirection {
  RVec v;
  std::vector<double> logMu;  // per generator of the factor
};

// Common real eigenvectors of a commuting integer family.
std::vector<EigenDirection> commonEigenvectors(const std::vector<IMat>& mats) {
  const auto d = mats.front().rows();
  RMat G = RMat::Zero(d, d);
  // Fixed irrational-looking weights keep the combination generic.
  for (std::size_t j = 0; j < mats.size(); ++j) G += (1.0 + 0.6180339887 * double(j + 1)) * mats[j].cast<double>();
  Eigen::EigenSolver<RMat> es(G);
  std::vector<EigenDirection> out;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(es.eigenvalues()[i].imag()) > 1e-9 * (1.0 + std::abs(es.eigenvalues()[i])))
      throw Error("monodromies have non-real eigenvalues; only real splittings are supported");
    RVec v = es.eigenvectors().col(i).real().normalized();
    EigenDirection e{v, {}};
    for (const auto& M : mats) {
      const RVec Mv = M.cast<double>() * v;
      const double mu = Mv.dot(v);
      if ((Mv - mu * v).norm() > 1e-9 * (1.0 + std::abs(mu))) throw Error("monodromies do not share eigenvectors");
      if (std::abs(std::log(std::abs(mu))) < 1e-9) throw Error("monodromy is not hyperbolic: eigenvalue on the unit circle");
      e.logMu.push_back(std::log(std::abs(mu)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

void validateRoof(const Roof& r, int dim) {
  if (r.dim != dim) throw Error("roof dimension differs from the base dimension");
  if (r.modeCount() > 5) throw Error(fmt::format("roof has {} modes; at most 5 are supported", r.modeCount()));
  for (const auto& m : r.modes) {
    const auto other = r.coefficient(-m.q);
    if (std::abs(other - std::conj(m.c)) > 1e-14) throw Error("roof coefficients must be conjugate-symmetric");
  }
  const double mn = r.gridMin(64);
  if (!(mn > 0.1)) throw Error(fmt::format("roof must stay above 0.1 on the grid (minimum {:.4g})", mn));
}

// Splitting and chamber from the factors, calibrated at A0.
void finalize(SuspensionModel& m, RVec A0) {
  m.kappa = 0;
  m.baseDim = 0;
  for (const auto& f : m.factors) {
    m.kappa += f.kappa;
    m.baseDim += f.baseDim;
  }
  if (A0.size() == 0) A0 = RVec::Ones(m.kappa);
  const int D = m.baseDim + m.kappa;
  Splitting sp;
  sp.E0 = RMat::Zero(D, m.kappa);
  for (int j = 0; j < m.kappa; ++j) sp.E0(m.baseDim + j, j) = 1.0;
  std::vector<RVec> eu, es;
  int baseOff = 0, genOff = 0;
  for (const auto& f : m.factors) {
    for (const auto& e : commonEigenvectors(f.monodromies)) {
      RVec chi = RVec::Zero(m.kappa);
      for (int j = 0; j < f.kappa; ++j) chi[genOff + j] = e.logMu[j] / f.roofs[j].mean();
      RVec v = RVec::Zero(D);
      v.segment(baseOff, f.baseDim) = e.v;
      const double at = chi.dot(A0);
      if (std::abs(at) < 1e-12) throw Error("calibration direction is not transversely hyperbolic");
      if (at > 0) {
        eu.push_back(v);
        sp.chiU.push_back(chi);
      } else {
        es.push_back(v);
        sp.chiS.push_back(chi);
      }
    }
    baseOff += f.baseDim;
    genOff += f.kappa;
  }
  sp.Eu = RMat(D, eu.size());
  for (std::size_t i = 0; i < eu.size(); ++i) sp.Eu.col(i) = eu[i];
  sp.Es = RMat(D, es.size());
  for (std::size_t i = 0; i < es.size(); ++i) sp.Es.col(i) = es[i];
  m.splitting = sp;
  WeylChamber w;
  w.A0 = A0;
  for (const auto& c : sp.chiU) {
    w.functionals.push_back(c);
    w.signs.push_back(1);
  }
  for (const auto& c : sp.chiS) {
    w.functionals.push_back(c);
    w.signs.push_back(-1);
  }
  m.chamber = w;
  // Suspension flows preserve dx ds: every return map has Jacobian det M = +-1.
  m.volumePreserving = true;
  for (const auto& f : m.factors)
    for (const auto& M : f.monodromies)
      if (std::llabs(determinant(M)) != 1) m.volumePreserving = false;
}

Factor makeFactor(std::vector<IMat> mats, std::vector<Roof> roofs) {
  Factor f;
  f.baseDim = static_cast<int>(mats.front().rows());
  f.kappa = static_cast<int>(mats.size());
  for (const auto& M : mats) {
    if (M.rows() != f.baseDim || M.cols() != f.baseDim) throw Error("monodromies must be square of equal size");
    f.inverses.push_back(integerInverse(M));
  }
  for (std::size_t a = 0; a < mats.size(); ++a)
    for (std::size_t b = a + 1; b < mats.size(); ++b)
      if (mats[a] * mats[b] != mats[b] * mats[a]) throw Error("monodromies must commute exactly over Z");
  if (roofs.size() != mats.size()) throw Error("need one roof per monodromy");
  for (const auto& r : roofs) validateRoof(r, f.baseDim);
  if (f.kappa > 1)
    for (const auto& r : roofs)
      if (!r.isConstant()) throw Error("variable roofs are only supported on rank-one factors");
  f.monodromies = std::move(mats);
  f.roofs = std::move(roofs);
  return f;
}

}  // namespace

double Roof::operator()(const RVec& x) const {
  double v = 0.0;
  for (const auto& m : modes) {
    const double ph = kTwoPi * m.q.cast<double>().dot(x);
    v += m.c.real() * std::cos(ph) - m.c.imag() * std::sin(ph);
  }
  return v;
}

RVec Roof::gradient(const RVec& x) const {
  RVec g = RVec::Zero(dim);
  for (const auto& m : modes) {
    const double ph = kTwoPi * m.q.cast<double>().dot(x);
    const double dv = -m.c.real() * std::sin(ph) - m.c.imag() * std::cos(ph);
    g += kTwoPi * dv * m.q.cast<double>();
  }
  return g;
}

double Roof::mean() const { return coefficient(IVec::Zero(dim)).real(); }

bool Roof::isConstant() const {
  return std::all_of(modes.begin(), modes.end(), [](const RoofMode& m) { return m.q.isZero() || m.c == cd(0); });
}

int Roof::modeCount() const {
  int c = 0;
  for (const auto& m : modes)
    if (!m.q.isZero() && m.c != cd(0)) ++c;
  return c / 2;
}

double Roof::gridMin(int per) const {
  double mn = std::numeric_limits<double>::infinity();
  long long total = 1;
  for (int i = 0; i < dim; ++i) total *= per;
  RVec x(dim);
  for (long long idx = 0; idx < total; ++idx) {
    long long r = idx;
    for (int i = 0; i < dim; ++i) {
      x[i] = double(r % per) / per;
      r /= per;
    }
    mn = std::min(mn, (*this)(x));
  }
  return mn;
}

cd Roof::coefficient(const IVec& q) const {
  cd c = 0.0;
  for (const auto& m : modes)
    if (m.q == q) c += m.c;
  return c;
}

Roof constantRoof(int dim, double value) {
  if (!(value > 0.0)) throw Error("roof must be positive");
  return Roof{dim, {RoofMode{IVec::Zero(dim), cd(value)}}};
}

Roof cosineRoof(int dim, double eps, const IVec& mode) {
  if (mode.size() != dim) throw Error("roof mode dimension differs from the base dimension");
  Roof r = constantRoof(dim, 1.0);
  if (eps != 0.0 && !mode.isZero()) {
    r.modes.push_back({mode, cd(0.5 * eps)});
    r.modes.push_back({-mode, cd(0.5 * eps)});
  }
  return r;
}

std::pair<int, int> SuspensionModel::generatorSlot(int j) const {
  int off = 0;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (j < off + factors[f].kappa) return {static_cast<int>(f), j - off};
    off += factors[f].kappa;
  }
  throw Error(fmt::format("generator index {} out of range", j));
}

int SuspensionModel::baseOffset(int f) const {
  int off = 0;
  for (int i = 0; i < f; ++i) off += factors[i].baseDim;
  return off;
}

int SuspensionModel::generatorOffset(int f) const {
  int off = 0;
  for (int i = 0; i < f; ++i) off += factors[i].kappa;
  return off;
}

IMat SuspensionModel::monodromy(int j) const {
  const auto [f, loc] = generatorSlot(j);
  IMat M = IMat::Identity(baseDim, baseDim);
  const int off = baseOffset(f);
  M.block(off, off, factors[f].baseDim, factors[f].baseDim) = factors[f].monodromies[loc];
  return M;
}

const Roof& SuspensionModel::roof(int j) const {
  const auto [f, loc] = generatorSlot(j);
  return factors[f].roofs[loc];
}

bool SuspensionModel::constantRoofs() const {
  for (const auto& f : factors)
    for (const auto& r : f.roofs)
      if (!r.isConstant()) return false;
  return true;
}

SuspensionModel catSuspension(const IMat& M, const Roof& roof) {
  if (M.rows() != 2 || M.cols() != 2) throw Error("cat map must be 2x2");
  const long long det = determinant(M);
  if (det != 1 && det != -1) throw Error(fmt::format("cat map must have determinant +-1, got {}", det));
  const long long tr = M.trace();
  if (std::llabs(tr) <= 2) throw Error("matrix is not hyperbolic (|trace| <= 2)");
  SuspensionModel m;
  m.name = "cat";
  m.factors.push_back(makeFactor({M}, {roof}));
  finalize(m, RVec());
  return m;
}

SuspensionModel productAction(const SuspensionModel& m1, const SuspensionModel& m2) {
  SuspensionModel m;
  m.name = m1.name + "x" + m2.name;
  m.factors = m1.factors;
  m.factors.insert(m.factors.end(), m2.factors.begin(), m2.factors.end());
  RVec A0(m1.kappa + m2.kappa);
  A0 << m1.chamber.A0, m2.chamber.A0;
  finalize(m, A0);
  return m;
}

std::pair<IMat, IMat> cartanUnits() {
  IMat C(3, 3);
  C << 0, 0, -1, 1, 0, 3, 0, 1, 0;
  const IMat I = IMat::Identity(3, 3);
  const IMat M = C * C;
  const IMat N = C * C * (C - I);
  return {M, N};
}

SuspensionModel cartanT3() {
  auto [M, N] = cartanUnits();
  SuspensionModel m;
  m.name = "cartan-t3";
  m.factors.push_back(makeFactor({M, N}, {constantRoof(3), constantRoof(3)}));
  finalize(m, RVec());
  // Multiplicative independence up to exponent 6.
  for (int a = -6; a <= 6; ++a)
    for (int b = -6; b <= 6; ++b) {
      if (a == 0 && b == 0) continue;
      IMat P = IMat::Identity(3, 3);
      const auto& F = m.factors[0];
      for (int k = 0; k < std::abs(a); ++k) P = P * (a > 0 ? F.monodromies[0] : F.inverses[0]);
      for (int k = 0; k < std::abs(b); ++k) P = P * (b > 0 ? F.monodromies[1] : F.inverses[1]);
      if (P == IMat::Identity(3, 3)) throw Error("cartan generators are multiplicatively dependent");
    }
  return m;
}

SuspensionModel modelByName(const std::string& name, const ModelParams& p) {
  IMat arnold(2, 2);
  arnold << 2, 1, 1, 1;
  auto mode = [&](int dim) {
    if (p.mode.size() == 0) return IVec(IVec::Unit(dim, 0));
    if (p.mode.size() != dim) throw Error(fmt::format("roof mode must have {} entries", dim));
    return IVec(p.mode);
  };
  if (name == "arnold") {
    auto m = catSuspension(arnold, cosineRoof(2, p.epsilon, mode(2)));
    m.name = name;
    return m;
  }
  if (name == "arnold-product") {
    if (p.variableFactor < 0 || p.variableFactor > 1) throw Error("variableFactor must be 0 or 1");
    auto a = catSuspension(arnold, p.variableFactor == 0 ? cosineRoof(2, p.epsilon, mode(2)) : constantRoof(2));
    auto b = catSuspension(arnold, p.variableFactor == 1 ? cosineRoof(2, p.epsilon, mode(2)) : constantRoof(2));
    auto m = productAction(a, b);
    m.name = name;
    return m;
  }
  if (name == "cartan-t3") {
    if (p.epsilon != 0.0) throw Error("cartan-t3 supports constant roofs only");
    return cartanT3();
  }
  throw Error(fmt::format("unknown model '{}'", name));
}

SuspensionModel recalibrate(const SuspensionModel& model, const RVec& A0) {
  if (A0.size() != model.kappa) throw Error("calibration direction has the wrong dimension");
  if (!weylChamberTest(model, A0)) throw Error("calibration direction lies outside the Weyl chamber");
  SuspensionModel out = model;
  finalize(out, A0);
  return out;
}

bool weylChamberTest(const SuspensionModel& model, const RVec& A) {
  if (A.size() != model.kappa) throw Error("direction has the wrong number of coordinates");
  const auto& w = model.chamber;
  for (std::size_t i = 0; i < w.functionals.size(); ++i) {
    const double v = w.functionals[i].dot(A);
    if (!(v * w.signs[i] > 0.0)) return false;
  }
  return true;
}

RVec sampleChamberDirection(const SuspensionModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    RVec A(model.kappa);
    for (auto& a : A) a = g(rng);
    A.normalize();
    if (weylChamberTest(model, A)) return A;
  }
  throw Error("could not sample a direction in the Weyl chamber");
}

namespace {

ModelPoint advance(const SuspensionModel& model, ModelPoint q, RVec* v) {
  const int d = model.baseDim;
  for (int j = 0; j < model.kappa; ++j) {
    const auto [f, loc] = model.generatorSlot(j);
    const auto& F = model.factors[f];
    const int off = model.baseOffset(f);
    const int df = F.baseDim;
    const Roof& r = F.roofs[loc];
    const RMat M = F.monodromies[loc].cast<double>();
    const RMat Mi = F.inverses[loc].cast<double>();
    const bool variable = !r.isConstant();
    RVec xf = q.x.segment(off, df);
    double rx = r(xf);
    while (q.s[j] >= rx) {
      q.s[j] -= rx;
      if (v) {
        if (variable) (*v)[d + j] -= r.gradient(xf).dot(v->segment(off, df));
        v->segment(off, df) = M * v->segment(off, df);
      }
      xf = mod1(RVec(M * xf));
      rx = r(xf);
    }
    while (q.s[j] < 0.0) {
      xf = mod1(RVec(Mi * xf));
      if (v) {
        v->segment(off, df) = Mi * v->segment(off, df);
        if (variable) (*v)[d + j] += r.gradient(xf).dot(v->segment(off, df));
      }
      q.s[j] += r(xf);
    }
    q.x.segment(off, df) = xf;
  }
  return q;
}

}  // namespace

ModelPoint reduce(const SuspensionModel& model, ModelPoint p) {
  p.x = mod1(p.x);
  return advance(model, std::move(p), nullptr);
}

ModelPoint flow(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p) {
  if (A.size() != model.kappa) throw Error("direction has the wrong number of coordinates");
  ModelPoint q = p;
  q.s += t * A;
  return advance(model, std::move(q), nullptr);
}

ModelPoint flowTangent(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p, RVec& v) {
  if (A.size() != model.kappa) throw Error("direction has the wrong number of coordinates");
  if (v.size() != model.baseDim + model.kappa) throw Error("tangent vector has the wrong size");
  ModelPoint q = p;
  q.s += t * A;
  return advance(model, std::move(q), &v);
}

std::vector<long long> returnCounts(const SuspensionModel& model, const RVec& A, double t, const ModelPoint& p) {
  std::vector<long long> counts(model.kappa, 0);
  ModelPoint q = p;
  q.s += t * A;
  for (int j = 0; j < model.kappa; ++j) {
    const auto [f, loc] = model.generatorSlot(j);
    const auto& F = model.factors[f];
    const int off = model.baseOffset(f);
    const Roof& r = F.roofs[loc];
    const RMat M = F.monodromies[loc].cast<double>();
    const RMat Mi = F.inverses[loc].cast<double>();
    RVec xf = q.x.segment(off, F.baseDim);
    while (q.s[j] >= r(xf)) {
      q.s[j] -= r(xf);
      xf = mod1(RVec(M * xf));
      ++counts[j];
    }
    while (q.s[j] < 0.0) {
      xf = mod1(RVec(Mi * xf));
      q.s[j] += r(xf);
      --counts[j];
    }
  }
  return counts;
}

ModelPoint samplePoint(const SuspensionModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double bound = 1.0;
  for (int j = 0; j < model.kappa; ++j) {
    double b = 0.0;
    for (const auto& m : model.roof(j).modes) b += std::abs(m.c);
    bound *= b;
  }
  ModelPoint p{RVec(model.baseDim), RVec(model.kappa)};
  while (true) {
    for (auto& x : p.x) x = u(rng);
    double w = 1.0;
    std::vector<double> r(model.kappa);
    for (int j = 0; j < model.kappa; ++j) {
      const auto [f, loc] = model.generatorSlot(j);
      r[j] = model.roof(j)(p.x.segment(model.baseOffset(f), model.factors[f].baseDim));
      w *= r[j];
    }
    if (u(rng) * bound <= w) {
      for (int j = 0; j < model.kappa; ++j) p.s[j] = u(rng) * r[j];
      return p;
    }
  }
}

GrowthEstimate cL2(const SuspensionModel& model, const RVec& A, std::size_t samples, std::uint64_t seed, double t) {
  GrowthEstimate g;
  g.samples = samples;
  if (model.volumePreserving) return g;
  // log Jacobian of phi_t at x: sum_j k_j log|det M_j| over the roof returns.
  std::mt19937_64 rng(seed);
  std::vector<double> logDet(model.kappa);
  for (int j = 0; j < model.kappa; ++j)
    logDet[j] = std::log(std::abs(model.monodromy(j).cast<double>().determinant()));
  double mx = -std::numeric_limits<double>::infinity(), sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto p = samplePoint(model, rng);
    const auto k = returnCounts(model, A, t, p);
    double lj = 0.0;
    for (int j = 0; j < model.kappa; ++j) lj += double(k[j]) * logDet[j];
    const double rate = 0.5 * lj / t;
    mx = std::max(mx, rate);
    sum += rate;
    sum2 += rate * rate;
  }
  const double n = double(samples);
  const double var = std::max(0.0, sum2 / n - (sum / n) * (sum / n));
  g.value = std::max(0.0, mx);
  g.stderr_ = std::sqrt(var / n);
  return g;
}

}  // namespace rt
